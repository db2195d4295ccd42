#include "stepforge/service/review_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/rubrics.hpp"
#include "stepforge/util/hash.hpp"

namespace stepforge::review {

namespace {

[[noreturn]] void mismatch(const std::string& msg) { throw Error(ErrorCode::SchemaMismatch, msg); }

bool is_ab(const json& v) { return v.is_string() && (v == "A" || v == "B"); }
bool is_abt(const json& v) { return is_ab(v) || (v.is_string() && v == "Tie"); }

bool nonempty_text(const json& v) { return v.is_string() && !v.get<std::string>().empty(); }
bool transcript_like(const json& v) { return nonempty_text(v) || (v.is_array() && !v.empty()) || v.is_object(); }

template <std::size_t N>
void exact_names(const json& list, const std::array<rubrics::Item, N>& items, const char* field) {
  if (!list.is_array()) mismatch(std::string(field) + " must be a list");
  std::set<std::string> seen;
  for (const auto& v : list) {
    if (!v.is_string()) mismatch(std::string(field) + " entries must be strings");
    const auto name = v.get<std::string>();
    if (std::none_of(items.begin(), items.end(), [&](const auto& i) { return i.key == name; }))
      mismatch(std::string(field) + ": unknown entry " + name);
    if (!seen.insert(name).second) mismatch(std::string(field) + ": duplicate entry " + name);
  }
  for (const auto& i : items)
    if (!seen.count(std::string(i.key))) mismatch(std::string(field) + ": missing " + std::string(i.key));
}

std::vector<std::string> names_of(const json& list) { return list.get<std::vector<std::string>>(); }

constexpr std::string_view kHiddenKeys[] = {"backend", "backend_id", "backends", "model", "provenance",
                                            "machine_choice", "machine_verdict", "source"};

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::PairwiseUtterance: return "PairwiseUtterance";
    case TaskKind::PairwisePlan: return "PairwisePlan";
    case TaskKind::HeadToHead: return "HeadToHead";
    case TaskKind::QualityLikert: return "QualityLikert";
  }
  return "?";
}

std::string_view to_string(TaskStatus status) { return status == TaskStatus::Open ? "Open" : "Closed"; }

TaskKind parse_task_kind(std::string_view text) {
  for (auto k : kAllKinds)
    if (to_string(k) == text) return k;
  mismatch("unknown task kind '" + std::string(text) + "'");
}

TaskStatus parse_task_status(std::string_view text) {
  if (text == "open" || text == "Open") return TaskStatus::Open;
  if (text == "closed" || text == "Closed") return TaskStatus::Closed;
  mismatch("unknown task status '" + std::string(text) + "'");
}

bool ReviewTask::has_voted(const std::string& annotator) const {
  return std::any_of(votes.begin(), votes.end(), [&](const Vote& v) { return v.annotator_id == annotator; });
}

void validate_payload(TaskKind kind, const json& p) {
  if (!p.is_object()) mismatch("payload must be an object");
  if (is_pairwise(kind)) {
    if (!nonempty_text(p.value("context", json()))) mismatch("pairwise payload needs a context string");
    const auto c = p.value("candidates", json());
    if (!c.is_object() || c.size() != 2 || !nonempty_text(c.value("A", json())) || !nonempty_text(c.value("B", json())))
      mismatch("pairwise payload needs candidates A and B");
    if (p.contains("machine_choice") && !is_ab(p["machine_choice"])) mismatch("machine_choice must be A or B");
  } else if (kind == TaskKind::HeadToHead) {
    const auto t = p.value("transcripts", json());
    if (!t.is_object() || t.size() != 2 || !transcript_like(t.value("A", json())) ||
        !transcript_like(t.value("B", json())))
      mismatch("head-to-head payload needs transcripts A and B");
    exact_names(p.value("criteria", json()), rubrics::kHeadToHead, "criteria");
    if (p.contains("machine_verdict")) {
      const auto& m = p["machine_verdict"];
      if (!m.is_object()) mismatch("machine_verdict must be an object");
      for (const auto& [k, v] : m.items())
        if (!is_abt(v)) mismatch("machine_verdict." + k + " must be A, B or Tie");
    }
  } else {
    if (!transcript_like(p.value("dialogue", json()))) mismatch("likert payload needs a dialogue");
    exact_names(p.value("dimensions", json()), rubrics::kLikertDimensions, "dimensions");
  }
}

void validate_vote(const ReviewTask& task, const json& vote) {
  if (!vote.is_object()) mismatch("vote must be an object");
  if (is_pairwise(task.kind)) {
    if (!is_ab(vote.value("choice", json()))) mismatch("pairwise vote needs choice A or B");
    if (vote.contains("left") && !is_ab(vote["left"])) mismatch("left must be A or B");
    return;
  }
  if (task.kind == TaskKind::HeadToHead) {
    const auto v = vote.value("verdicts", json());
    const auto criteria = names_of(task.payload["criteria"]);
    if (!v.is_object() || v.size() != criteria.size()) mismatch("vote must answer every criterion");
    for (const auto& c : criteria)
      if (!is_abt(v.value(c, json()))) mismatch("criterion " + c + " needs A, B or Tie");
    return;
  }
  const auto r = vote.value("ratings", json());
  const auto dims = names_of(task.payload["dimensions"]);
  if (!r.is_object() || r.size() != dims.size()) mismatch("vote must rate every dimension");
  for (const auto& d : dims) {
    const auto s = r.value(d, json());
    if (!s.is_number_integer() || s.get<int>() < 1 || s.get<int>() > 5) mismatch("dimension " + d + " needs 1-5");
  }
}

std::string plurality(const std::vector<std::string>& labels) {
  std::map<std::string, int> counts;
  for (const auto& l : labels) ++counts[l];
  std::string best;
  int top = 0;
  bool tied = false;
  for (const auto& [label, n] : counts) {
    if (n > top) {
      best = label;
      top = n;
      tied = false;
    } else if (n == top) {
      tied = true;
    }
  }
  return tied || best.empty() ? "Tie" : best;
}

json aggregate(const ReviewTask& task) {
  if (is_pairwise(task.kind)) {
    std::vector<std::string> labels;
    for (const auto& v : task.votes) labels.push_back(v.value["choice"].get<std::string>());
    return json{{"choice", plurality(labels)}};
  }
  if (task.kind == TaskKind::HeadToHead) {
    json out = json::object();
    for (const auto& c : names_of(task.payload["criteria"])) {
      std::vector<std::string> labels;
      for (const auto& v : task.votes) labels.push_back(v.value["verdicts"][c].get<std::string>());
      out[c] = plurality(labels);
    }
    return json{{"verdicts", out}};
  }
  json out = json::object();
  for (const auto& d : names_of(task.payload["dimensions"])) {
    double sum = 0;
    for (const auto& v : task.votes) sum += v.value["ratings"][d].get<int>();
    out[d] = task.votes.empty() ? 0.0 : sum / static_cast<double>(task.votes.size());
  }
  return json{{"means", out}};
}

json blind(const json& payload) {
  if (payload.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : payload.items()) {
      if (std::find(std::begin(kHiddenKeys), std::end(kHiddenKeys), k) != std::end(kHiddenKeys)) continue;
      out[k] = blind(v);
    }
    return out;
  }
  if (payload.is_array()) {
    json out = json::array();
    for (const auto& v : payload) out.push_back(blind(v));
    return out;
  }
  return payload;
}

std::map<TaskKind, KindAgreement> agreement_report(const std::vector<ReviewTask>& tasks) {
  std::map<TaskKind, KindAgreement> out;
  for (auto k : kAllKinds) out[k];
  for (const auto& t : tasks) {
    if (t.status != TaskStatus::Closed) continue;
    auto& a = out[t.kind];
    ++a.closed;
    if (is_pairwise(t.kind) && t.payload.contains("machine_choice")) {
      ++a.compared;
      a.matched += t.verdict["choice"] == t.payload["machine_choice"];
    } else if (t.kind == TaskKind::HeadToHead && t.payload.contains("machine_verdict") &&
               t.payload["machine_verdict"].contains("OverallPreference")) {
      ++a.compared;
      a.matched += t.verdict["verdicts"]["OverallPreference"] == t.payload["machine_verdict"]["OverallPreference"];
    }
  }
  for (auto& [k, a] : out)
    if (a.compared > 0) a.rate = static_cast<double>(a.matched) / static_cast<double>(a.compared);
  return out;
}

json to_json(const std::map<TaskKind, KindAgreement>& report) {
  json out = json::object();
  for (const auto& [k, a] : report)
    out[std::string(to_string(k))] = {{"closed", a.closed},
                                      {"compared", a.compared},
                                      {"matched", a.matched},
                                      {"agreement_rate", a.rate ? json(*a.rate) : json(nullptr)}};
  return out;
}

// --- store -----------------------------------------------------------------

ReviewStore::ReviewStore(std::filesystem::path data_dir) : log_path_(std::move(data_dir) / "events.jsonl") {
  std::filesystem::create_directories(log_path_.parent_path());
  if (std::filesystem::exists(log_path_)) replay();
}

void ReviewStore::replay() {
  for (const auto& e : read_jsonl(log_path_)) {
    const auto type = e.value("event", std::string());
    if (type == "task_created") {
      auto s = std::make_unique<Slot>();
      s->task.task_id = e.at("task_id").get<std::string>();
      s->task.kind = parse_task_kind(e.at("kind").get<std::string>());
      s->task.payload = e.at("payload");
      s->task.required_votes = e.at("required_votes").get<int>();
      order_.push_back(s->task.task_id);
      tasks_[s->task.task_id] = std::move(s);
    } else if (type == "vote") {
      auto it = tasks_.find(e.at("task_id").get<std::string>());
      if (it == tasks_.end())
        throw Error(ErrorCode::InvalidRecord, log_path_.string() + ": vote for unknown task");
      apply_vote(it->second->task, e.at("annotator_id").get<std::string>(), e.at("vote"));
    } else {
      throw Error(ErrorCode::InvalidRecord, log_path_.string() + ": unknown event '" + type + "'");
    }
  }
}

void ReviewStore::append(const json& event) {
  std::lock_guard lock(log_mu_);
  std::ofstream out(log_path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot append to " + log_path_.string());
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::UnreadableFile, "write failed on " + log_path_.string());
}

ReviewStore::Slot& ReviewStore::slot(const std::string& task_id) const {
  std::shared_lock lock(index_mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::TaskNotFound, task_id);
  return *it->second;
}

void ReviewStore::apply_vote(ReviewTask& task, const std::string& annotator_id, const json& vote) {
  task.votes.push_back({annotator_id, vote});
  if (static_cast<int>(task.votes.size()) >= task.required_votes) {
    task.status = TaskStatus::Closed;
    task.verdict = aggregate(task);
  }
}

std::string ReviewStore::create_task(TaskKind kind, const json& payload, int required_votes) {
  if (required_votes < 1) throw Error(ErrorCode::SchemaMismatch, "required_votes must be positive");
  validate_payload(kind, payload);
  std::unique_lock lock(index_mu_);
  const auto id = util::short_id("task", std::string(to_string(kind)) + "\n" + payload.dump() + "\n" +
                                             std::to_string(order_.size()));
  append({{"event", "task_created"},
          {"task_id", id},
          {"kind", to_string(kind)},
          {"payload", payload},
          {"required_votes", required_votes}});
  auto s = std::make_unique<Slot>();
  s->task = {id, kind, payload, required_votes, TaskStatus::Open, {}, nullptr};
  tasks_[id] = std::move(s);
  order_.push_back(id);
  return id;
}

ReviewTask ReviewStore::submit_vote(const std::string& task_id, const std::string& annotator_id, const json& vote) {
  auto& s = slot(task_id);
  std::lock_guard lock(s.mu);
  if (s.task.status == TaskStatus::Closed) throw Error(ErrorCode::TaskClosed, task_id);
  if (s.task.has_voted(annotator_id)) throw Error(ErrorCode::DuplicateVote, task_id + " by " + annotator_id);
  validate_vote(s.task, vote);
  append({{"event", "vote"}, {"task_id", task_id}, {"annotator_id", annotator_id}, {"vote", vote}});
  apply_vote(s.task, annotator_id, vote);
  return s.task;
}

ReviewTask ReviewStore::get(const std::string& task_id) const {
  auto& s = slot(task_id);
  std::lock_guard lock(s.mu);
  return s.task;
}

std::vector<ReviewTask> ReviewStore::list(std::optional<TaskStatus> status, std::optional<TaskKind> kind) const {
  std::vector<ReviewTask> out;
  std::shared_lock lock(index_mu_);
  for (const auto& id : order_) {
    auto& s = *tasks_.at(id);
    std::lock_guard task_lock(s.mu);
    if (status && s.task.status != *status) continue;
    if (kind && s.task.kind != *kind) continue;
    out.push_back(s.task);
  }
  return out;
}

}  // namespace stepforge::review
