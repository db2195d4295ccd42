#include "stepforge/plan/action_cursor.hpp"

#include <cctype>
#include <map>
#include <set>

#include "stepforge/error.hpp"

namespace stepforge::plan {

namespace {

// Variants of the same diagnostic label seen in generated data.
const std::map<std::string, std::string>& alias_table() {
  static const std::map<std::string, std::string> table = {
      {"ready to cognitive reframing", "move to cognitive reframing"},
      {"ready for cognitive reframing", "move to cognitive reframing"},
      {"understanding triggering situation", "understanding trigger situation"},
  };
  return table;
}

std::string strip_enumerator(const std::string& key) {
  std::size_t i = 0;
  while (i < key.size() && std::isdigit(static_cast<unsigned char>(key[i]))) ++i;
  if (i == 0 || i >= key.size() || (key[i] != '.' && key[i] != ')')) return key;
  ++i;
  while (i < key.size() && key[i] == ' ') ++i;
  return key.substr(i);
}

}  // namespace

std::optional<std::string> match_form(std::string_view key) {
  std::string canon;
  try {
    canon = canonicalize_action_key(key);
  } catch (const Error&) {
    return std::nullopt;
  }
  canon = strip_enumerator(canon);
  if (canon.empty()) return std::nullopt;
  if (auto it = alias_table().find(canon); it != alias_table().end()) return it->second;
  return canon;
}

std::optional<std::size_t> key_index(const ActionSequence& sequence, std::string_view action) {
  auto wanted = match_form(action);
  if (!wanted) return std::nullopt;
  for (std::size_t i = 0; i < sequence.keys.size(); ++i)
    if (match_form(sequence.keys[i]) == wanted) return i;
  return std::nullopt;
}

std::vector<std::string> sequence_violations(const ActionSequence& sequence) {
  std::vector<std::string> out;
  const auto& keys = sequence.keys;
  std::set<std::string> seen;
  for (const auto& k : keys) {
    auto form = match_form(k);
    if (!form) {
      out.emplace_back("empty-key");
      continue;
    }
    if (!seen.insert(*form).second) out.push_back("duplicate-key:" + k);
  }
  if (sequence.stage == Stage::Diagnostic) {
    static const std::vector<std::string> canonical = {
        "understanding surface level", "understanding trigger situation",
        "understanding automatic thoughts", "move to cognitive reframing"};
    bool same = keys.size() == canonical.size();
    for (std::size_t i = 0; same && i < keys.size(); ++i) same = match_form(keys[i]) == canonical[i];
    if (!same) out.emplace_back("diagnostic-keys-not-canonical");
    return out;
  }
  const auto terminal = *match_form(kEndSession);
  if (keys.empty() || match_form(keys.back()) != terminal) {
    out.emplace_back("missing-terminal-key");
    return out;
  }
  const std::size_t body = keys.size() - 1;
  if (body < kMinInterventionKeys || body > kMaxInterventionKeys)
    out.push_back("key-count:" + std::to_string(body));
  for (std::size_t i = 0; i < body; ++i) {
    auto words = word_count(keys[i]);
    if (words < kMinKeyWords || words > kMaxKeyWords) out.push_back("key-words:" + keys[i]);
    if (match_form(keys[i]) == terminal) out.push_back("early-terminal:" + keys[i]);
  }
  return out;
}

ActionSequence finalize_intervention_keys(const std::vector<std::string>& raw_keys) {
  ActionSequence seq{Stage::Intervention, {}};
  for (const auto& k : raw_keys) {
    if (!match_form(k)) throw ActionConstraintError({k}, "empty action key");
    seq.keys.push_back(k);
  }
  const auto terminal = *match_form(kEndSession);
  if (seq.keys.empty() || match_form(seq.keys.back()) != terminal) {
    if (seq.keys.size() > kMaxInterventionKeys - 1)
      throw ActionConstraintError({}, "terminal key missing and " + std::to_string(seq.keys.size()) +
                                          " keys leave no room to append it");
    seq.keys.emplace_back(kEndSession);
  }

  std::vector<std::string> offending;
  const std::size_t body = seq.keys.size() - 1;
  for (std::size_t i = 0; i < body; ++i) {
    auto words = word_count(seq.keys[i]);
    if (words < kMinKeyWords || words > kMaxKeyWords || match_form(seq.keys[i]) == terminal)
      offending.push_back(seq.keys[i]);
  }
  std::set<std::string> seen;
  for (const auto& k : seq.keys)
    if (!seen.insert(*match_form(k)).second) offending.push_back(k);
  if (body < kMinInterventionKeys || body > kMaxInterventionKeys) {
    throw ActionConstraintError(offending, "expected " + std::to_string(kMinInterventionKeys) + "-" +
                                               std::to_string(kMaxInterventionKeys) +
                                               " keys before the terminal key, got " +
                                               std::to_string(body));
  }
  if (!offending.empty()) throw ActionConstraintError(offending, "action keys break the 3-5 word rule or repeat");
  return seq;
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Stay: return "Stay";
    case Verdict::Advance: return "Advance";
    case Verdict::Violation: return "Violation";
  }
  return "Violation";
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::Skip: return "Skip";
    case ViolationKind::Regress: return "Regress";
    case ViolationKind::UnknownAction: return "UnknownAction";
    case ViolationKind::IncompleteSequence: return "IncompleteSequence";
  }
  return "UnknownAction";
}

std::optional<std::string> ActionCursor::next_key() const {
  if (position + 1 >= sequence.keys.size()) return std::nullopt;
  return sequence.keys[position + 1];
}

AdvanceResult advance(const ActionCursor& cursor, std::string_view proposed_action, int turn_num) {
  AdvanceResult result{cursor, Verdict::Violation, std::nullopt};
  auto idx = key_index(cursor.sequence, proposed_action);
  if (!idx) {
    result.violation = ViolationKind::UnknownAction;
  } else if (*idx == cursor.position) {
    result.verdict = Verdict::Stay;
  } else if (*idx == cursor.position + 1) {
    result.verdict = Verdict::Advance;
    result.cursor.position = *idx;
  } else if (*idx > cursor.position) {
    result.violation = ViolationKind::Skip;
  } else {
    result.violation = ViolationKind::Regress;
  }
  if (result.verdict != Verdict::Violation)
    result.cursor.history.push_back({turn_num, cursor.sequence.keys[*idx]});
  return result;
}

AdvanceResult step(const ActionCursor& cursor, std::string_view proposed_action, int turn_num) {
  if (!cursor.history.empty()) return advance(cursor, proposed_action, turn_num);
  AdvanceResult result{cursor, Verdict::Violation, std::nullopt};
  auto idx = key_index(cursor.sequence, proposed_action);
  if (!idx) {
    result.violation = ViolationKind::UnknownAction;
  } else if (*idx == cursor.position) {
    result.verdict = Verdict::Stay;
    result.cursor.history.push_back({turn_num, cursor.sequence.keys[*idx]});
  } else {
    result.violation = *idx > cursor.position ? ViolationKind::Skip : ViolationKind::Regress;
  }
  return result;
}

MonotoneResult check_monotone(std::span<const DialogueTurn> turns, const ActionSequence& sequence) {
  MonotoneResult result;
  if (sequence.keys.empty()) {
    result.ok = false;
    result.violations.push_back({0, ViolationKind::IncompleteSequence, ""});
    return result;
  }
  ActionCursor cursor(sequence);
  for (const auto& turn : turns) {
    if (turn.role != Role::Counselor) continue;
    auto r = step(cursor, turn.action, turn.turn_num);
    if (r.verdict == Verdict::Violation) {
      result.violations.push_back({turn.turn_num, *r.violation, turn.action});
    } else {
      cursor = std::move(r.cursor);
    }
  }
  result.final_position = cursor.position;
  if (sequence.stage == Stage::Intervention && (cursor.history.empty() || !cursor.at_terminal())) {
    int last = turns.empty() ? 0 : turns.back().turn_num;
    result.violations.push_back({last, ViolationKind::IncompleteSequence, ""});
  }
  result.ok = result.violations.empty();
  return result;
}

}  // namespace stepforge::plan
