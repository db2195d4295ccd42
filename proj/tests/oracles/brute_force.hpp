#pragma once
// Reference implementations written without the library. Slow on purpose.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// lowercase, trim, single spaces
inline std::string squash(const std::string& s) {
  std::string out;
  bool gap = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      gap = !out.empty();
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

/// Position-by-position simulation of the action cursor. Starts before the
/// first key; each counselor action must name the current key or the next.
/// A rejected step leaves the position alone.
struct CursorSim {
  bool accepted = true;
  long position = -1;
};

inline CursorSim simulate_cursor(const std::vector<std::string>& keys, const std::vector<std::string>& actions,
                                 bool needs_terminal) {
  CursorSim sim;
  for (const auto& a : actions) {
    long idx = -1;
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (squash(keys[i]) == squash(a)) {
        idx = static_cast<long>(i);
        break;
      }
    bool stay = idx >= 0 && idx == sim.position;
    bool next = idx >= 0 && idx == sim.position + 1;
    if (!stay && !next) {
      sim.accepted = false;
      continue;
    }
    sim.position = idx;
  }
  if (needs_terminal && sim.position != static_cast<long>(keys.size()) - 1) sim.accepted = false;
  if (sim.position < 0) sim.accepted = sim.accepted && actions.empty() && !needs_terminal;
  return sim;
}

/// Selection and rank-matched pairing by repeated scans.
struct PairingSim {
  std::size_t selected = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

inline PairingSim brute_pairing(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<bool> used_top(n, false), used_bot(n, false);
  std::vector<std::size_t> top, bot;
  for (int k = 0; k < 2; ++k) {
    std::optional<std::size_t> best, worst;
    for (std::size_t i = 0; i < n; ++i) {
      if (!used_top[i] && (!best || scores[i] > scores[*best])) best = i;  // first max wins
      if (!used_bot[i] && (!worst || scores[i] <= scores[*worst])) worst = i;  // last min wins
    }
    if (best) {
      used_top[*best] = true;
      top.push_back(*best);
    }
    if (worst) {
      used_bot[*worst] = true;
      bot.push_back(*worst);
    }
  }
  PairingSim out;
  out.selected = top.empty() ? 0 : top.front();
  for (std::size_t k = 0; k < top.size() && k < bot.size(); ++k)
    if (top[k] != bot[k] && scores[top[k]] > scores[bot[k]]) out.pairs.emplace_back(top[k], bot[k]);
  return out;
}

inline double direct_entropy(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  double h = 0.0;
  for (double c : counts)
    if (c > 0) h -= (c / total) * std::log(c / total);
  return h;
}

/// Mean of the named items and of the rest.
inline std::pair<double, double> direct_srs(const std::map<std::string, double>& items,
                                            const std::vector<std::string>& hindering) {
  double hs = 0, hn = 0, ps = 0, pn = 0;
  for (const auto& [k, v] : items) {
    if (std::find(hindering.begin(), hindering.end(), k) != hindering.end()) {
      hs += v;
      ++hn;
    } else {
      ps += v;
      ++pn;
    }
  }
  return {ps / pn, hs / hn};
}

/// The discard rule written out: any item at or below the line drops the session.
inline bool keeps(const std::vector<int>& ctrs8, int line = 4) {
  for (int v : ctrs8)
    if (v <= line) return false;
  return true;
}

}  // namespace oracle
