#pragma once
// Generated by derive_values.py. Frozen; regenerate only when an input changes.

#include <array>
#include <cstddef>
#include <utility>

namespace oracle {

inline constexpr double kUniformEntropy2 = 0.6931471805599453;
inline constexpr double kUniformEntropy4 = 1.3862943611198906;
inline constexpr double kUniformEntropy8 = 2.0794415416798357;
inline constexpr double kUniformEntropy16 = 2.772588722239781;
inline constexpr double kEntropy211 = 1.0397207708399179;

inline constexpr std::size_t kExampleSelected = 0;
inline constexpr std::array<std::pair<std::size_t, std::size_t>, 2> kExamplePairs = {{{0, 3}, {1, 2}}};

// style counts for 10 profiles, largest first
inline constexpr std::array<int, 8> kRoundRobin10 = {2, 2, 1, 1, 1, 1, 1, 1};

// [k1,k2,k3] over k1..k4 + end session, intervention
inline constexpr bool kIncompleteFoldOk = false;
inline constexpr std::size_t kIncompleteFoldPosition = 2;

inline constexpr double kStatsRate = 0.6667;
inline constexpr double kStatsAvgTurns = 36.0;
inline constexpr double kStatsAvgPairs = 19.0;

inline constexpr double kHinderingExample = 1.5;
inline constexpr double kAgreement4of5 = 0.8;

}  // namespace oracle
