#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/structured_call.hpp"

namespace stepforge::eval {

// --- tags ------------------------------------------------------------------

enum class Tag {
  Q_Evid, Q_Alt, Q_Worst, Q_Util, Q_Adv, Q_Disadv, Q_Real, Q_Cont, Q_Wish, Q_Identify,
  R_Simple, R_Emo, R_Thought, R_Meaning, R_Reframe, R_Summary,
};

inline constexpr std::size_t kTagCount = 16;
extern const std::array<Tag, kTagCount> kAllTags;

std::string_view to_string(Tag tag) noexcept;
bool is_question(Tag tag) noexcept;
/// Accepts the 16 names plus the judge variants Q_Solv and Q_thought.
/// Throws Error(UnknownTag).
Tag parse_tag(std::string_view text);

/// 1-based counselor utterance index -> tags. Absent keys mean no tags.
using TagMap = std::map<int, std::vector<Tag>>;

/// Judge output {"counselor_k": [...]}. Throws ParseRejected for shape
/// problems and Error(UnknownTag) for labels outside the set.
TagMap parse_tag_map(const json& value, int counselor_count);

json to_json(const TagMap& tags);
TagMap tag_map_from_json(const json& value);

/// Shannon entropy of a count vector. `base` e gives nats.
double entropy(std::span<const double> counts, double base = 2.718281828459045);
/// Entropy of one session's pooled Q and R tag distribution.
double session_entropy(const TagMap& tags, double base = 2.718281828459045);
/// Mean session entropy. Sessions without tags contribute 0.
double strategy_diversity(std::span<const TagMap> sessions, double base = 2.718281828459045);

struct TagDistribution {
  std::map<std::string, double> question;    // percent within the Q family
  std::map<std::string, double> reflection;  // percent within the R family
};

TagDistribution tag_distribution(std::span<const TagMap> sessions);
/// Largest k entries, ties by name.
std::vector<std::pair<std::string, double>> top_k(const std::map<std::string, double>& percents, std::size_t k);

// --- SRS -------------------------------------------------------------------

struct SrsConfig {
  std::vector<std::string> hindering_set = {"TherapeuticStuckness", "InterventionDiscomfort",
                                            "EmotionalDeterioration", "GuidanceDeficit"};
};

/// Throws Error(ConfigError) unless hindering_set is a proper subset of the items.
void check_config(const SrsConfig& cfg);

struct SrsResult {
  std::map<std::string, double> items;
  std::map<std::string, std::string> reasons;
  double helpful_mean = 0.0;
  double hindering_mean = 0.0;
};

/// Subscale means over the given item scores.
SrsResult srs_means(const std::map<std::string, double>& items, const SrsConfig& cfg = {});

/// {"Metric_k": {"score", "reason"}} for k = 1..14. Throws ParseRejected.
SrsResult parse_srs(const json& value, const SrsConfig& cfg = {});

// --- judge calls -----------------------------------------------------------

RubricScore score_ctrs7(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                        std::span<const DialogueTurn> transcript);
SrsResult score_srs(const gateway::Gateway& gw, const gateway::CallSpec& judge, std::span<const DialogueTurn> transcript,
                    const SrsConfig& cfg = {});
TagMap tag_turns(const gateway::Gateway& gw, const gateway::CallSpec& judge, std::span<const DialogueTurn> transcript);

struct Target {
  std::string text;
  bool flagged = false;  // more than one sentence was returned
};

Target parse_target(const json& value);
Target extract_target(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                      std::span<const DialogueTurn> transcript);

/// Case-insensitive containment in either direction against any automatic thought.
bool target_overlaps(const std::string& target, const ClientProfile& profile);

// --- head to head ----------------------------------------------------------

enum class Preference { A, B, Tie };
std::string_view to_string(Preference p) noexcept;
Preference parse_preference(std::string_view text);

std::vector<std::string> default_criteria();

/// Criterion -> verdict from one judge reply, positions as shown.
std::map<std::string, Preference> parse_h2h(const json& value, std::span<const std::string> criteria);

/// Judges (a, b) and (b, a); a criterion keeps its verdict only when both
/// orders agree, otherwise Tie.
std::map<std::string, Preference> head_to_head(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                                               std::span<const DialogueTurn> a, std::span<const DialogueTurn> b,
                                               std::span<const std::string> criteria);

/// Combines verdicts from the (a, b) and (b, a) orders.
Preference debias(Preference first_order, Preference swapped_order) noexcept;

struct WinRates {
  double a = 0.0;
  double b = 0.0;
  double tie = 0.0;  // percentages
};

WinRates win_rates(std::span<const Preference> verdicts);

}  // namespace stepforge::eval
