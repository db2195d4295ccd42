#include "stepforge/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "stepforge/prompts.hpp"
#include "stepforge/quality/gate.hpp"
#include "stepforge/rubrics.hpp"

namespace stepforge::eval {

const std::array<Tag, kTagCount> kAllTags = {
    Tag::Q_Evid,   Tag::Q_Alt,   Tag::Q_Worst,     Tag::Q_Util,    Tag::Q_Adv,     Tag::Q_Disadv,
    Tag::Q_Real,   Tag::Q_Cont,  Tag::Q_Wish,      Tag::Q_Identify, Tag::R_Simple, Tag::R_Emo,
    Tag::R_Thought, Tag::R_Meaning, Tag::R_Reframe, Tag::R_Summary,
};

namespace {

constexpr std::array<std::string_view, kTagCount> kTagNames = {
    "Q_Evid",   "Q_Alt",  "Q_Worst",     "Q_Util",     "Q_Adv",   "Q_Disadv", "Q_Real",    "Q_Cont",
    "Q_Wish",   "Q_Identify", "R_Simple", "R_Emo",    "R_Thought", "R_Meaning", "R_Reframe", "R_Summary",
};

constexpr std::string_view kCtrsSuffixes[] = {"_score_reason", "_reason"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

int counselor_count(std::span<const DialogueTurn> transcript) {
  return static_cast<int>(std::count_if(transcript.begin(), transcript.end(),
                                        [](const DialogueTurn& t) { return t.role == Role::Counselor; }));
}

std::map<std::string, double> percents(const std::map<std::string, double>& counts) {
  double total = 0.0;
  for (const auto& [_, c] : counts) total += c;
  std::map<std::string, double> out;
  if (total <= 0.0) return out;
  for (const auto& [k, c] : counts) out[k] = 100.0 * c / total;
  return out;
}

}  // namespace

std::string_view to_string(Tag tag) noexcept { return kTagNames[static_cast<std::size_t>(tag)]; }

bool is_question(Tag tag) noexcept { return static_cast<std::size_t>(tag) < 10; }

Tag parse_tag(std::string_view text) {
  const auto t = trim(text);
  if (t == "Q_thought") return Tag::Q_Identify;
  if (lower(t) == "q_solv") return Tag::Q_Identify;
  for (std::size_t i = 0; i < kTagCount; ++i)
    if (lower(kTagNames[i]) == lower(t)) return kAllTags[i];
  throw Error(ErrorCode::UnknownTag, "unknown tag: " + t);
}

TagMap parse_tag_map(const json& value, int count) {
  if (!value.is_object()) throw gateway::ParseRejected("tag output is not an object");
  TagMap out;
  for (const auto& [key, tags] : value.items()) {
    constexpr std::string_view prefix = "counselor_";
    if (key.rfind(prefix, 0) != 0) throw gateway::ParseRejected("unexpected key " + key);
    int idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoi(key.substr(prefix.size()), &used);
      if (used != key.size() - prefix.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw gateway::ParseRejected("bad key " + key);
    }
    if (idx < 1 || idx > count) throw gateway::ParseRejected(key + " does not name a counselor turn");
    if (!tags.is_array()) throw gateway::ParseRejected(key + " is not a list");
    std::vector<Tag> list;
    for (const auto& t : tags) {
      if (!t.is_string()) throw gateway::ParseRejected(key + " holds a non-string tag");
      auto tag = parse_tag(t.get<std::string>());
      if (std::find(list.begin(), list.end(), tag) == list.end()) list.push_back(tag);
    }
    out[idx] = std::move(list);
  }
  return out;
}

json to_json(const TagMap& tags) {
  json j = json::object();
  for (const auto& [idx, list] : tags) {
    json arr = json::array();
    for (auto t : list) arr.push_back(std::string(to_string(t)));
    j["counselor_" + std::to_string(idx)] = arr;
  }
  return j;
}

TagMap tag_map_from_json(const json& value) {
  int max_index = 0;
  for (const auto& [key, _] : value.items())
    if (key.rfind("counselor_", 0) == 0) max_index = std::max(max_index, std::atoi(key.c_str() + 10));
  return parse_tag_map(value, max_index);
}

double entropy(std::span<const double> counts, double base) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h / std::log(base);
}

double session_entropy(const TagMap& tags, double base) {
  std::array<double, kTagCount> counts{};
  for (const auto& [_, list] : tags)
    for (auto t : list) counts[static_cast<std::size_t>(t)] += 1.0;
  return entropy(counts, base);
}

double strategy_diversity(std::span<const TagMap> sessions, double base) {
  if (sessions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sessions) sum += session_entropy(s, base);
  return sum / static_cast<double>(sessions.size());
}

TagDistribution tag_distribution(std::span<const TagMap> sessions) {
  std::map<std::string, double> q, r;
  for (const auto& s : sessions)
    for (const auto& [_, list] : s)
      for (auto t : list) (is_question(t) ? q : r)[std::string(to_string(t))] += 1.0;
  return {percents(q), percents(r)};
}

std::vector<std::pair<std::string, double>> top_k(const std::map<std::string, double>& values, std::size_t k) {
  std::vector<std::pair<std::string, double>> out(values.begin(), values.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > k) out.resize(k);
  return out;
}

// ---------------------------------------------------------------------------

void check_config(const SrsConfig& cfg) {
  if (cfg.hindering_set.empty() || cfg.hindering_set.size() >= rubrics::kSrs.size())
    throw Error(ErrorCode::ConfigError, "hindering_set must be a non-empty proper subset of the SRS items");
  for (const auto& h : cfg.hindering_set) {
    bool known = std::any_of(rubrics::kSrs.begin(), rubrics::kSrs.end(), [&](const auto& i) { return i.key == h; });
    if (!known) throw Error(ErrorCode::ConfigError, "unknown SRS item in hindering_set: " + h);
  }
}

SrsResult srs_means(const std::map<std::string, double>& items, const SrsConfig& cfg) {
  SrsResult r;
  r.items = items;
  double help = 0.0, hinder = 0.0;
  int nh = 0, nd = 0;
  for (const auto& [k, v] : items) {
    if (std::find(cfg.hindering_set.begin(), cfg.hindering_set.end(), k) != cfg.hindering_set.end()) {
      hinder += v;
      ++nd;
    } else {
      help += v;
      ++nh;
    }
  }
  r.helpful_mean = nh ? help / nh : 0.0;
  r.hindering_mean = nd ? hinder / nd : 0.0;
  return r;
}

SrsResult parse_srs(const json& value, const SrsConfig& cfg) {
  if (!value.is_object()) throw gateway::ParseRejected("SRS output is not an object");
  std::map<std::string, double> items;
  std::map<std::string, std::string> reasons;
  for (std::size_t i = 0; i < rubrics::kSrs.size(); ++i) {
    const auto key = "Metric_" + std::to_string(i + 1);
    if (!value.contains(key)) throw gateway::ParseRejected("missing " + key);
    const auto& m = value[key];
    if (!m.is_object() || !m.contains("score") || !m["score"].is_number())
      throw gateway::ParseRejected(key + " lacks a numeric score");
    const double s = m["score"].get<double>();
    if (s < 1 || s > 5 || s != std::floor(s)) throw gateway::ParseRejected(key + " score outside 1-5");
    const std::string name(rubrics::kSrs[i].key);
    items[name] = s;
    reasons[name] = m.contains("reason") && m["reason"].is_string() ? m["reason"].get<std::string>() : "";
  }
  auto r = srs_means(items, cfg);
  r.reasons = std::move(reasons);
  return r;
}

RubricScore score_ctrs7(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                        std::span<const DialogueTurn> transcript) {
  if (transcript.empty()) throw Error(ErrorCode::InvalidRecord, "empty transcript");
  return gateway::call_structured(
      gw, judge.request(prompts::ctrs7(transcript), prompts::tag::kCtrs7), gateway::JsonShape::Object,
      [](const json& v) { return quality::parse_rubric(v, rubrics::kCtrs7, "ctrs7", {0, 6}, kCtrsSuffixes); },
      ErrorCode::JudgeParseFailed);
}

SrsResult score_srs(const gateway::Gateway& gw, const gateway::CallSpec& judge, std::span<const DialogueTurn> transcript,
                    const SrsConfig& cfg) {
  if (transcript.empty()) throw Error(ErrorCode::InvalidRecord, "empty transcript");
  check_config(cfg);
  return gateway::call_structured(
      gw, judge.request(prompts::srs(transcript), prompts::tag::kSrs), gateway::JsonShape::Object,
      [&](const json& v) { return parse_srs(v, cfg); }, ErrorCode::JudgeParseFailed);
}

TagMap tag_turns(const gateway::Gateway& gw, const gateway::CallSpec& judge, std::span<const DialogueTurn> transcript) {
  const int count = counselor_count(transcript);
  return gateway::call_structured(
      gw, judge.request(prompts::tagging(transcript), prompts::tag::kTags), gateway::JsonShape::Object,
      [&](const json& v) { return parse_tag_map(v, count); }, ErrorCode::JudgeParseFailed);
}

Target parse_target(const json& value) {
  if (!value.is_object() || !value.contains("therapeutic_targets"))
    throw gateway::ParseRejected("target output lacks therapeutic_targets");
  json v = value["therapeutic_targets"];
  if (v.is_array() && !v.empty()) v = v.front();
  if (!v.is_string()) throw gateway::ParseRejected("therapeutic_targets is not a string");
  Target t;
  t.text = trim(v.get<std::string>());
  if (t.text.empty()) throw gateway::ParseRejected("empty target");
  for (std::size_t i = 0; i + 1 < t.text.size(); ++i) {
    const char c = t.text[i];
    if ((c == '.' || c == '!' || c == '?') && t.text[i + 1] == ' ' && !trim(t.text.substr(i + 1)).empty()) {
      t.text = t.text.substr(0, i + 1);
      t.flagged = true;
      break;
    }
  }
  return t;
}

Target extract_target(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                      std::span<const DialogueTurn> transcript) {
  if (transcript.empty()) throw Error(ErrorCode::InvalidRecord, "empty transcript");
  return gateway::call_structured(gw, judge.request(prompts::target(transcript), prompts::tag::kTarget),
                                  gateway::JsonShape::Object, parse_target, ErrorCode::JudgeParseFailed);
}

bool target_overlaps(const std::string& target, const ClientProfile& profile) {
  const auto t = lower(target);
  for (const auto& thought : profile.automatic_thoughts) {
    const auto a = lower(trim(thought));
    if (a.empty() || a == kUnknown) continue;
    if (t.find(a) != std::string::npos || a.find(t) != std::string::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Preference p) noexcept {
  switch (p) {
    case Preference::A: return "A";
    case Preference::B: return "B";
    case Preference::Tie: return "Tie";
  }
  return "";
}

Preference parse_preference(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "a" || t == "counselor a") return Preference::A;
  if (t == "b" || t == "counselor b") return Preference::B;
  if (t == "tie") return Preference::Tie;
  throw gateway::ParseRejected("not a verdict: " + std::string(text));
}

std::vector<std::string> default_criteria() {
  std::vector<std::string> out;
  for (const auto& item : rubrics::kHeadToHead) out.emplace_back(item.key);
  return out;
}

std::map<std::string, Preference> parse_h2h(const json& value, std::span<const std::string> criteria) {
  if (!value.is_object()) throw gateway::ParseRejected("verdict output is not an object");
  std::map<std::string, Preference> out;
  for (const auto& c : criteria) {
    if (!value.contains(c) || !value[c].is_string()) throw gateway::ParseRejected("missing verdict for " + c);
    out[c] = parse_preference(value[c].get<std::string>());
  }
  return out;
}

Preference debias(Preference first_order, Preference swapped_order) noexcept {
  Preference mapped = swapped_order == Preference::A   ? Preference::B
                      : swapped_order == Preference::B ? Preference::A
                                                       : Preference::Tie;
  return first_order == mapped ? first_order : Preference::Tie;
}

std::map<std::string, Preference> head_to_head(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                                               std::span<const DialogueTurn> a, std::span<const DialogueTurn> b,
                                               std::span<const std::string> criteria) {
  auto ask = [&](std::span<const DialogueTurn> first, std::span<const DialogueTurn> second) {
    return gateway::call_structured(
        gw, judge.request(prompts::head_to_head(first, second, criteria), prompts::tag::kHeadToHead),
        gateway::JsonShape::Object, [&](const json& v) { return parse_h2h(v, criteria); },
        ErrorCode::JudgeParseFailed);
  };
  const auto forward = ask(a, b);
  const auto swapped = ask(b, a);
  std::map<std::string, Preference> out;
  for (const auto& c : criteria) out[c] = debias(forward.at(c), swapped.at(c));
  return out;
}

WinRates win_rates(std::span<const Preference> verdicts) {
  WinRates w;
  if (verdicts.empty()) return w;
  for (auto v : verdicts) (v == Preference::A ? w.a : v == Preference::B ? w.b : w.tie) += 1.0;
  const double n = static_cast<double>(verdicts.size());
  w.a = 100.0 * w.a / n;
  w.b = 100.0 * w.b / n;
  w.tie = 100.0 * w.tie / n;
  return w;
}

}  // namespace stepforge::eval
