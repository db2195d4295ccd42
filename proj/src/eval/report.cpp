#include "stepforge/eval/report.hpp"

#include <cstdio>
#include <sstream>

#include "stepforge/rubrics.hpp"
#include "stepforge/util/parallel.hpp"

namespace stepforge::eval {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

json top_json(const std::map<std::string, double>& percents) {
  json arr = json::array();
  for (const auto& [k, v] : top_k(percents, 3)) arr.push_back({{"tag", k}, {"percent", v}});
  return arr;
}

}  // namespace

EvalOptions parse_metrics(const std::string& list) {
  EvalOptions o;
  o.ctrs = o.srs = o.tags = o.targets = false;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "ctrs") o.ctrs = true;
    else if (item == "srs") o.srs = true;
    else if (item == "tags" || item == "diversity") o.tags = true;
    else if (item == "targets") o.targets = true;
    else if (!item.empty()) throw Error(ErrorCode::ConfigError, "unknown metric: " + item);
  }
  return o;
}

json to_json(const SessionEval& e) {
  json j{{"session_id", e.session_id}, {"profile_id", e.profile_id}, {"backend", e.backend}};
  j["ctrs7"] = e.ctrs7 ? json(*e.ctrs7) : json(nullptr);
  if (e.srs) {
    j["srs"] = {{"items", e.srs->items},
                {"reasons", e.srs->reasons},
                {"helpful_mean", e.srs->helpful_mean},
                {"hindering_mean", e.srs->hindering_mean}};
  } else {
    j["srs"] = nullptr;
  }
  j["tags"] = e.tags ? to_json(*e.tags) : json(nullptr);
  j["target"] = e.target ? json{{"text", e.target->text}, {"flagged", e.target->flagged}} : json(nullptr);
  j["target_overlap"] = e.target_overlap ? json(*e.target_overlap) : json(nullptr);
  j["errors"] = e.errors;
  return j;
}

std::string counselor_backend_of(const SessionRecord& record) {
  for (const char* key : {"counselor", "dialogue"})
    if (auto it = record.provenance.backends.find(key); it != record.provenance.backends.end()) return it->second;
  return "unknown";
}

std::vector<SessionEval> evaluate_sessions(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                                           const std::vector<SessionRecord>& records,
                                           const std::map<std::string, ClientProfile>& profiles,
                                           const EvalOptions& options, std::size_t workers) {
  auto outcomes = util::parallel_map(records, workers, [&](const SessionRecord& r, std::size_t) {
    SessionEval e;
    e.session_id = r.session_id;
    e.profile_id = r.profile_id;
    e.backend = counselor_backend_of(r);
    const auto transcript = r.all_turns();
    auto attempt = [&](const char* what, auto&& fn) {
      try {
        fn();
      } catch (const Error& err) {
        if (err.code() == ErrorCode::ReplayMiss || err.code() == ErrorCode::BackendUnavailable) throw;
        e.errors.push_back(std::string(what) + ": " + err.what());
      }
    };
    if (options.ctrs) attempt("ctrs7", [&] { e.ctrs7 = score_ctrs7(gw, judge, transcript); });
    if (options.srs) attempt("srs", [&] { e.srs = score_srs(gw, judge, transcript, options.srs_config); });
    if (options.tags) attempt("tags", [&] { e.tags = tag_turns(gw, judge, transcript); });
    if (options.targets) {
      attempt("target", [&] { e.target = extract_target(gw, judge, transcript); });
      auto p = profiles.find(r.profile_id);
      if (e.target && p != profiles.end()) e.target_overlap = target_overlaps(e.target->text, p->second);
    }
    return e;
  });
  std::vector<SessionEval> out;
  for (auto& o : outcomes) {
    if (!o.ok()) std::rethrow_exception(o.error);
    out.push_back(std::move(*o.value));
  }
  return out;
}

json aggregate(const std::vector<SessionEval>& evals, const EvalOptions& options) {
  std::map<std::string, std::vector<const SessionEval*>> by_backend;
  for (const auto& e : evals) by_backend[e.backend].push_back(&e);

  json backends = json::object();
  for (const auto& [backend, list] : by_backend) {
    json b{{"sessions", list.size()}};
    std::size_t errors = 0;
    for (const auto* e : list) errors += e->errors.size();
    b["errors"] = errors;

    if (options.ctrs) {
      std::map<std::string, double> sums;
      std::size_t n = 0;
      for (const auto* e : list) {
        if (!e->ctrs7) continue;
        ++n;
        for (const auto& [k, v] : e->ctrs7->item_scores) sums[k] += v;
      }
      if (n) {
        json items = json::object();
        double total = 0.0;
        for (const auto& item : rubrics::kCtrs7) {
          double m = sums[std::string(item.key)] / static_cast<double>(n);
          items[std::string(item.key)] = m;
          total += m;
        }
        b["ctrs7"] = {{"n", n}, {"items", items}, {"mean", total / static_cast<double>(rubrics::kCtrs7.size())}};
      }
    }
    if (options.srs) {
      double help = 0.0, hinder = 0.0;
      std::size_t n = 0;
      for (const auto* e : list)
        if (e->srs) {
          ++n;
          help += e->srs->helpful_mean;
          hinder += e->srs->hindering_mean;
        }
      if (n) b["srs"] = {{"n", n}, {"helpful", help / static_cast<double>(n)}, {"hindering", hinder / static_cast<double>(n)}};
    }
    if (options.tags) {
      std::vector<TagMap> maps;
      for (const auto* e : list)
        if (e->tags) maps.push_back(*e->tags);
      if (!maps.empty()) {
        auto dist = tag_distribution(maps);
        b["diversity"] = strategy_diversity(maps, options.entropy_base);
        b["tags"] = {{"question_top3", top_json(dist.question)}, {"reflection_top3", top_json(dist.reflection)}};
      }
    }
    if (options.targets) {
      std::size_t n = 0, hits = 0;
      for (const auto* e : list)
        if (e->target_overlap) {
          ++n;
          hits += *e->target_overlap ? 1 : 0;
        }
      if (n) b["target_overlap_rate"] = static_cast<double>(hits) / static_cast<double>(n);
    }
    backends[backend] = b;
  }
  return json{{"backends", backends}};
}

std::string render_report(const json& report) {
  std::ostringstream out;
  const auto& backends = report.contains("backends") ? report["backends"] : json::object();
  if (backends.empty()) {
    out << "no data\n";
    return out.str();
  }

  out << "Counselor competence (CTRS, 0-6)\n";
  out << pad("Backend", 20);
  for (const auto& item : rubrics::kCtrs7) out << pad(std::string(item.key), item.key.size() + 2);
  out << "Mean\n";
  for (const auto& [name, b] : backends.items()) {
    out << pad(name, 20);
    if (!b.contains("ctrs7")) {
      out << "(not computed)\n";
      continue;
    }
    for (const auto& item : rubrics::kCtrs7)
      out << pad(fixed(b["ctrs7"]["items"][std::string(item.key)].get<double>()), item.key.size() + 2);
    out << fixed(b["ctrs7"]["mean"].get<double>()) << "\n";
  }

  out << "\nClient reactions (SRS, 1-5) and strategy diversity\n";
  out << pad("Backend", 20) << pad("Helpful", 10) << pad("Hindering", 12) << pad("Diversity", 12) << "Target overlap\n";
  for (const auto& [name, b] : backends.items()) {
    out << pad(name, 20);
    out << pad(b.contains("srs") ? fixed(b["srs"]["helpful"].get<double>()) : "-", 10);
    out << pad(b.contains("srs") ? fixed(b["srs"]["hindering"].get<double>()) : "-", 12);
    out << pad(b.contains("diversity") ? fixed(b["diversity"].get<double>()) : "-", 12);
    out << (b.contains("target_overlap_rate") ? fixed(100.0 * b["target_overlap_rate"].get<double>(), 1) + "%" : "-")
        << "\n";
  }

  out << "\nTop question and reflection tags (%)\n";
  for (const auto& [name, b] : backends.items()) {
    out << pad(name, 20);
    if (!b.contains("tags")) {
      out << "(not computed)\n";
      continue;
    }
    std::string q, r;
    for (const auto& t : b["tags"]["question_top3"])
      q += t["tag"].get<std::string>() + " " + fixed(t["percent"].get<double>()) + "  ";
    for (const auto& t : b["tags"]["reflection_top3"])
      r += t["tag"].get<std::string>() + " " + fixed(t["percent"].get<double>()) + "  ";
    out << "Q: " << (q.empty() ? "-" : q) << "| R: " << (r.empty() ? "-" : r) << "\n";
  }
  return out.str();
}

}  // namespace stepforge::eval
