#pragma once

// Monotonic action progression: a counselor may repeat the current action or
// move to the next one, never skip ahead or go back.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepforge/core/model.hpp"

namespace stepforge::plan {

inline constexpr std::size_t kMinInterventionKeys = 5;
inline constexpr std::size_t kMaxInterventionKeys = 7;
inline constexpr std::size_t kMinKeyWords = 3;
inline constexpr std::size_t kMaxKeyWords = 5;

/// Normalized form used for every key comparison: canonicalized, leading
/// enumerators ("4.") removed, known spelling variants mapped to one label.
/// Returns nullopt for keys that are empty after normalization.
std::optional<std::string> match_form(std::string_view key);

/// Index of the key in the sequence that `action` refers to, if any.
std::optional<std::size_t> key_index(const ActionSequence& sequence, std::string_view action);

/// Names of ActionSequence invariant violations; empty when valid.
std::vector<std::string> sequence_violations(const ActionSequence& sequence);

/// Builds an intervention sequence from raw planner keys. Appends the terminal
/// key when it is missing and at most six other keys were given. Throws
/// ActionConstraintError listing the offending keys otherwise.
ActionSequence finalize_intervention_keys(const std::vector<std::string>& raw_keys);

enum class Verdict { Stay, Advance, Violation };
enum class ViolationKind { Skip, Regress, UnknownAction, IncompleteSequence };

std::string_view to_string(Verdict verdict) noexcept;
std::string_view to_string(ViolationKind kind) noexcept;

struct CursorStep {
  int turn_num = 0;
  std::string action;
};

struct ActionCursor {
  ActionSequence sequence;
  std::size_t position = 0;
  std::vector<CursorStep> history;

  explicit ActionCursor(ActionSequence seq) : sequence(std::move(seq)) {}

  const std::string& current_key() const { return sequence.keys.at(position); }
  /// The key after the current one, or nullopt at the end of the sequence.
  std::optional<std::string> next_key() const;
  bool at_terminal() const { return position + 1 == sequence.keys.size(); }
};

struct AdvanceResult {
  ActionCursor cursor;
  Verdict verdict = Verdict::Stay;
  std::optional<ViolationKind> violation;
};

/// Pure transition. The input cursor is never modified.
AdvanceResult advance(const ActionCursor& cursor, std::string_view proposed_action, int turn_num = 0);

/// Like advance, but a cursor with empty history only accepts the key at its
/// position: nothing before the first action may be skipped either.
AdvanceResult step(const ActionCursor& cursor, std::string_view proposed_action, int turn_num = 0);

struct MonotoneViolation {
  int turn_num = 0;
  ViolationKind kind = ViolationKind::Skip;
  std::string action;

  bool operator==(const MonotoneViolation&) const = default;
};

struct MonotoneResult {
  bool ok = true;
  std::vector<MonotoneViolation> violations;
  std::size_t final_position = 0;
};

/// Folds `step` over the counselor turns. Intervention sequences must also
/// end on their terminal key.
MonotoneResult check_monotone(std::span<const DialogueTurn> turns, const ActionSequence& sequence);

}  // namespace stepforge::plan
