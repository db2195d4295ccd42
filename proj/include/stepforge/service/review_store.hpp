#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepforge/error.hpp"

namespace stepforge::review {

using json = nlohmann::json;

enum class TaskKind { PairwiseUtterance, PairwisePlan, HeadToHead, QualityLikert };
enum class TaskStatus { Open, Closed };

std::string_view to_string(TaskKind kind);
std::string_view to_string(TaskStatus status);
TaskKind parse_task_kind(std::string_view text);
TaskStatus parse_task_status(std::string_view text);
inline constexpr TaskKind kAllKinds[] = {TaskKind::PairwiseUtterance, TaskKind::PairwisePlan, TaskKind::HeadToHead,
                                         TaskKind::QualityLikert};

inline bool is_pairwise(TaskKind k) { return k == TaskKind::PairwiseUtterance || k == TaskKind::PairwisePlan; }

struct Vote {
  std::string annotator_id;
  json value;
};

struct ReviewTask {
  std::string task_id;
  TaskKind kind = TaskKind::PairwiseUtterance;
  json payload;
  int required_votes = 3;
  TaskStatus status = TaskStatus::Open;
  std::vector<Vote> votes;
  json verdict;  // null while open

  bool has_voted(const std::string& annotator) const;
};

/// Throws SchemaMismatch when the payload does not fit the kind.
///   pairwise:     {"context": str, "candidates": {"A": str, "B": str}, "machine_choice"?: "A"|"B"}
///   head-to-head: {"transcripts": {"A": .., "B": ..}, "criteria": [7 names], "machine_verdict"?: {criterion: A|B|Tie}}
///   likert:       {"dialogue": .., "dimensions": [6 names]}
void validate_payload(TaskKind kind, const json& payload);
void validate_vote(const ReviewTask& task, const json& vote);

/// Strict plurality over labels, else "Tie".
std::string plurality(const std::vector<std::string>& labels);
json aggregate(const ReviewTask& task);

/// Copy of the payload with backend identities and machine verdicts removed.
json blind(const json& payload);

struct KindAgreement {
  std::size_t closed = 0;
  std::size_t compared = 0;
  std::size_t matched = 0;
  std::optional<double> rate;  // matched / compared; empty when nothing was compared
};

/// Agreement of the closed human majority with the machine orientation.
/// Pairwise: majority choice == machine_choice. Head-to-head: the OverallPreference
/// verdict == machine_verdict.OverallPreference. Likert tasks carry no machine side.
std::map<TaskKind, KindAgreement> agreement_report(const std::vector<ReviewTask>& tasks);
json to_json(const std::map<TaskKind, KindAgreement>& report);

/// Event-sourced task store. Every mutation is appended to events.jsonl before
/// the in-memory index changes; the index is rebuilt from the log on open.
class ReviewStore {
 public:
  explicit ReviewStore(std::filesystem::path data_dir);

  std::string create_task(TaskKind kind, const json& payload, int required_votes = 3);
  /// Returns the task after the vote is applied.
  ReviewTask submit_vote(const std::string& task_id, const std::string& annotator_id, const json& vote);

  ReviewTask get(const std::string& task_id) const;
  std::vector<ReviewTask> list(std::optional<TaskStatus> status = std::nullopt,
                               std::optional<TaskKind> kind = std::nullopt) const;

  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  struct Slot {
    std::mutex mu;
    ReviewTask task;
  };

  void replay();
  void append(const json& event);
  Slot& slot(const std::string& task_id) const;
  static void apply_vote(ReviewTask& task, const std::string& annotator_id, const json& vote);

  std::filesystem::path log_path_;
  mutable std::shared_mutex index_mu_;
  std::map<std::string, std::unique_ptr<Slot>> tasks_;
  std::vector<std::string> order_;
  std::mutex log_mu_;
};

}  // namespace stepforge::review
