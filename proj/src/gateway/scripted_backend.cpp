#include "stepforge/gateway/scripted_backend.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include <json.hpp>

#include "stepforge/error.hpp"
#include "stepforge/eval/metrics.hpp"
#include "stepforge/prompts.hpp"
#include "stepforge/rubrics.hpp"
#include "stepforge/util/hash.hpp"

namespace stepforge::gateway {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

class Dice {
 public:
  explicit Dice(std::uint64_t seed) : rng_(seed) {}
  std::size_t pick(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  int between(int lo, int hi) { return lo + static_cast<int>(pick(static_cast<std::size_t>(hi - lo + 1))); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  template <typename C>
  const auto& from(const C& c) {
    return c[pick(std::size(c))];
  }

 private:
  std::mt19937_64 rng_;
};

std::uint64_t seed_for(std::uint64_t base, const ChatRequest& r, std::size_t index) {
  std::string material = std::to_string(base) + "|" + r.request_tag + "|" + std::to_string(index);
  for (const auto& m : r.messages) material += "|" + std::string(to_string(m.role)) + ":" + m.content;
  return std::stoull(util::sha256_hex(material).substr(0, 16), nullptr, 16);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::optional<std::string> after_marker(const std::string& text, std::string_view marker) {
  for (const auto& line : lines_of(text))
    if (line.rfind(marker, 0) == 0) return line.substr(marker.size());
  return std::nullopt;
}

std::string section(const std::string& text, std::string_view start, std::string_view end) {
  auto b = text.find(start);
  if (b == std::string::npos) return {};
  b += start.size();
  auto e = text.find(end, b);
  return text.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

std::string strip(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::string sentence_body(std::string s) {
  s = strip(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::vector<std::string> action_order(const std::string& prompt) {
  for (const char* m : {prompts::marker::kStageOneOrder, prompts::marker::kStageTwoOrder})
    if (auto v = after_marker(prompt, m)) {
      try {
        return json::parse(*v).get<std::vector<std::string>>();
      } catch (const json::exception&) {
      }
    }
  return {};
}

// --- text banks ------------------------------------------------------------

constexpr std::string_view kNames[] = {"Jordan Reyes", "Priya Nair",  "Tomasz Kowal", "Amara Okafor",
                                       "Lena Hartmann", "Diego Salas", "Mei Tanaka",   "Sam Whitaker"};
constexpr std::string_view kOccupations[] = {"nurse", "software tester", "barista", "graduate student",
                                             "warehouse supervisor", "graphic designer", "teacher", "accountant"};
constexpr std::string_view kSituations[] = {
    "Replaying a recent conversation late at night and noticing nobody followed up.",
    "Getting short feedback from a manager in front of coworkers.",
    "Seeing friends post photos from an event they were not invited to.",
    "Sitting down to start an important task and freezing.",
    "Receiving a message that was read but not answered for hours.",
    "Making a small mistake during a family dinner and hearing someone laugh.",
};
constexpr std::string_view kSecondThoughts[] = {
    "I always end up disappointing people.", "Something is wrong with me.", "It will never get better.",
    "Everyone else handles this easily.",    "If I try, I will just fail again.",
};
constexpr std::string_view kOpeners[] = {"I hear you.", "Thank you for sharing that.", "That sounds really heavy.",
                                         "I appreciate you telling me this.", "It makes sense you feel that way."};
constexpr std::string_view kClientLines[] = {
    "I guess it has been building up for a while.",
    "I'm not sure how to explain it, it just feels bad most days.",
    "Honestly I try not to think about it too much.",
    "When it happens my chest gets tight and I just want to leave.",
    "Maybe you're right, but it still feels true to me.",
    "I never really looked at it that way before.",
    "It's hard to say it out loud.",
    "I suppose there were times when it went okay.",
    "I keep telling myself that nothing will change.",
    "That actually helps a little, I think.",
};
constexpr const char* kVoicedThought = "I keep thinking: ";
constexpr std::string_view kReasons[] = {
    "The counselor reflects the client's statements accurately and checks understanding.",
    "Questions are open and paced to the client's readiness.",
    "The exchange stays on the thoughts most linked to the distress.",
    "Some moments move faster than the client seems ready for.",
    "The counselor summarizes and invites correction.",
};
constexpr std::string_view kKeyBank[] = {
    "restate the automatic thought",  "rate belief strength now",      "explore evidence for thought",
    "explore evidence against thought", "consider alternative explanations", "examine realistic likely outcomes",
    "build a balanced thought",       "plan a small experiment",       "rerate belief strength together",
};

// --- handlers --------------------------------------------------------------

std::string decompose(const std::string& prompt, Dice& d) {
  const auto thought = strip(section(prompt, "Client Thought:\n", "\n\nPersonality Profile:"));
  ojson info;
  info["name"] = d.from(kNames);
  info["age"] = std::to_string(d.between(19, 64));
  info["gender"] = d.chance(0.5) ? "female" : "male";
  info["occupation"] = d.from(kOccupations);
  info["education"] = d.chance(0.5) ? "bachelor's degree" : "high school diploma";
  info["marital_status"] = d.chance(0.4) ? "married" : "single";
  info["family_details"] = "keeps in touch with one sibling";
  info["functioning"] = "managing work but sleeping poorly";
  info["interpersonal_relationships"] = "a small circle of friends, seen rarely";
  info["daily_life"] = "routine days, evenings mostly alone";
  info["past_history"] = "no prior counseling";
  info["social_support"] = "limited";

  ojson out;
  out["surface_level_problem"] = thought.empty() ? std::string("unknown")
                                                 : "Feeling low and on edge because " + sentence_body(thought) + ".";
  out["triggering_situation"] = d.from(kSituations);
  std::string thoughts = thought.empty() ? std::string("unknown") : thought;
  if (!thought.empty() && d.chance(0.6)) thoughts += "; " + std::string(d.from(kSecondThoughts));
  out["automatic_thoughts"] = thoughts;
  out["basic_information"] = info;
  return "Here is the profile.\n" + out.dump(2);
}

std::string counselor_line(const std::string& action, Dice& d) {
  std::string key = action;
  return std::string(d.from(kOpeners)) + " Our focus right now: " + key + ". What comes up for you when we look at it?";
}

// Monotone walk of `count` counselor turns over `keys`, optionally with one skip.
std::vector<std::string> walk(const std::vector<std::string>& keys, int count, bool skip, Dice& d) {
  std::vector<int> repeats(keys.size(), 1);
  for (int extra = count - static_cast<int>(keys.size()); extra > 0; --extra)
    ++repeats[d.pick(keys.size() > 1 ? keys.size() - 1 : 1)];
  std::vector<std::string> out;
  const std::size_t skipped = skip && keys.size() > 2 ? 1 + d.pick(keys.size() - 2) : keys.size();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i == skipped) continue;
    for (int r = 0; r < repeats[i]; ++r) out.push_back(keys[i]);
  }
  return out;
}

std::string stage_dialogue(const std::string& prompt, bool diagnostic, Dice& d) {
  auto keys = action_order(prompt);
  if (keys.empty()) return "I could not find an action order.";
  const int k = static_cast<int>(keys.size());
  const int max_counselor = diagnostic ? 7 : 10;
  const int count = d.between(k, std::max(k, max_counselor));
  const auto actions = walk(keys, count, d.chance(0.08), d);
  ojson turns = ojson::array();
  int n = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    ojson c;
    c["turn_num"] = ++n;
    c["role"] = "counselor";
    c["action_reasoning"] = "Working on: " + actions[i] + ".";
    c["action"] = actions[i];
    c["utterance"] = counselor_line(actions[i], d);
    turns.push_back(c);
    if (i + 1 == actions.size()) break;
    ojson cl;
    cl["turn_num"] = ++n;
    cl["role"] = "client";
    cl["action_reasoning"] = "n/a";
    cl["action"] = "n/a";
    cl["utterance"] = d.from(kClientLines);
    turns.push_back(cl);
  }
  return turns.dump(2);
}

std::string planner(const std::string& prompt, Dice& d) {
  std::vector<std::string> names;
  for (const auto& line : lines_of(prompt))
    if (line.rfind(prompts::marker::kStrategyLine, 0) == 0) {
      auto rest = line.substr(std::string_view(prompts::marker::kStrategyLine).size());
      names.push_back(rest.substr(0, rest.find(':')));
    }
  const std::string strategy = names.empty() ? std::string("Reality Testing") : names[d.pick(names.size())];

  std::vector<std::string> keys;
  const std::size_t want = static_cast<std::size_t>(d.between(5, 7));
  std::vector<std::size_t> idx(std::size(kKeyBank));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[d.pick(i + 1)]);
  idx.resize(want - 1);
  std::sort(idx.begin(), idx.end());
  for (auto i : idx) keys.emplace_back(kKeyBank[i]);
  std::string practice = "practice " + sentence_body(strategy);
  std::replace(practice.begin(), practice.end(), '-', ' ');
  keys.insert(keys.begin() + static_cast<std::ptrdiff_t>(keys.size() / 2 + 1), practice);
  if (d.chance(0.1)) keys.insert(keys.begin(), "reframe");  // breaks the word budget
  keys.emplace_back("End session");

  ojson out;
  out["plan"] = "In the next stage, I will use " + strategy +
                " to loosen the client's hold on the automatic thought and build a more balanced view.";
  out["reason_for_these_order"] = "The steps first make the thought concrete, then test it, then consolidate.";
  out["action_order"] = keys;
  return out.dump(2);
}

template <std::size_t N>
std::string score_object(const std::array<rubrics::Item, N>& items, std::string_view suffix, int lo, int hi, Dice& d,
                         std::optional<std::size_t> low_item = std::nullopt, int low_value = 0) {
  ojson out;
  for (std::size_t i = 0; i < N; ++i) {
    const std::string key(items[i].key);
    out[key] = low_item == i ? low_value : d.between(lo, hi);
    out[key + std::string(suffix)] = d.from(kReasons);
  }
  return out.dump(2);
}

std::string client(const std::string& prompt, Dice& d, double exit_rate) {
  const auto history = section(prompt, "Dialogue History\n", "\n\nGenerate the client's next turn.");
  int counselor_lines = 0;
  for (const auto& line : lines_of(history)) counselor_lines += line.rfind("Counselor: ", 0) == 0;
  ojson out;
  out["thoughts"] = "Unsure how much to say yet.";
  std::vector<std::string> thoughts;
  if (auto line = after_marker(prompt, "- Automatic thoughts: ")) {
    std::string rest = *line;
    for (std::size_t pos; (pos = rest.find("; ")) != std::string::npos; rest = rest.substr(pos + 2))
      thoughts.push_back(rest.substr(0, pos));
    if (!strip(rest).empty()) thoughts.push_back(strip(rest));
  }
  if (counselor_lines >= 4 && d.chance(exit_rate))
    out["utterance"] = "exit";
  else if (counselor_lines >= 2 && !thoughts.empty() && d.chance(0.3))
    out["utterance"] = std::string(kVoicedThought) + thoughts[d.pick(thoughts.size())];
  else
    out["utterance"] = d.from(kClientLines);
  return out.dump();
}

// `corrected`: the request carries a correction, which a cooperative model follows.
std::string counselor(const std::string& prompt, Dice& d, double invalid_rate, bool corrected) {
  const auto keys = action_order(prompt);
  const auto current = strip(after_marker(prompt, prompts::marker::kCurrentAction).value_or("none"));
  const auto next = strip(after_marker(prompt, prompts::marker::kNextAction).value_or("none"));
  int turn = 1, max_turns = 20;
  if (auto t = after_marker(prompt, prompts::marker::kTurnOf))
    std::sscanf(t->c_str(), "%d of %d", &turn, &max_turns);
  const bool diagnostic = after_marker(prompt, prompts::marker::kStageOneOrder).has_value();

  std::string action;
  if (current == "none") {
    action = next;
  } else if (next == "none") {
    action = current;
  } else {
    auto pos = std::find(keys.begin(), keys.end(), current);
    const int keys_left = static_cast<int>(keys.end() - pos) - 1;
    const int reserve = diagnostic ? 8 : 0;
    const int turns_left = max_turns - turn + 1 - reserve;
    const bool hurry = turns_left <= keys_left + 1;
    action = hurry || d.chance(0.55) ? next : current;
  }
  if (!corrected && d.chance(invalid_rate)) {
    auto pos = std::find(keys.begin(), keys.end(), next);
    action = pos != keys.end() && pos + 1 != keys.end() ? *(pos + 1) : std::string("give direct advice");
  }
  ojson out;
  out["action_reasoning"] = action == current ? "The current goal needs more exploration." : "The current goal is met.";
  out["action"] = action;
  out["utterance"] = action == "End session"
                         ? std::string("We covered a lot today. Let's pause here and pick this up next time.")
                         : counselor_line(action, d);
  return out.dump();
}

std::size_t candidate_count(const std::string& prompt) {
  std::size_t n = 0;
  const std::string_view m = prompts::marker::kCandidate;
  for (const auto& line : lines_of(prompt))
    if (line.rfind(m, 0) == 0 && line.size() > m.size() && std::isdigit(static_cast<unsigned char>(line[m.size()])))
      ++n;
  return n;
}

template <std::size_t N>
std::string score_list(const std::string& prompt, const std::array<rubrics::Item, N>& items, Dice& d) {
  ojson arr = ojson::array();
  const auto n = candidate_count(prompt);
  for (std::size_t i = 0; i < n; ++i) {
    ojson entry;
    for (const auto& item : items) {
      entry[std::string(item.key)] = d.between(1, 5);
      entry[std::string(item.key) + "_reason"] = d.from(kReasons);
    }
    arr.push_back(entry);
  }
  return arr.dump(2);
}

std::string srs(Dice& d) {
  ojson out;
  for (std::size_t i = 0; i < rubrics::kSrs.size(); ++i) {
    const auto& h = eval::SrsConfig{}.hindering_set;
    const bool hindering = std::find(h.begin(), h.end(), rubrics::kSrs[i].key) != h.end();
    out["Metric_" + std::to_string(i + 1)] = {{"score", hindering ? d.between(1, 3) : d.between(2, 5)},
                                              {"reason", d.from(kReasons)}};
  }
  return out.dump(2);
}

std::string tags(const std::string& prompt, Dice& d) {
  constexpr std::string_view kTags[] = {"Q_Evid",   "Q_Alt",    "Q_Worst",  "Q_Util",    "Q_Adv",    "Q_Disadv",
                                        "Q_Real",   "Q_Cont",   "Q_Wish",   "Q_Identify", "R_Simple", "R_Emo",
                                        "R_Thought", "R_Meaning", "R_Reframe", "R_Summary"};
  const auto dialogue = section(prompt, "DIALOGUE\n--------------------------------\n", "\n\n----");
  int count = 0;
  for (const auto& line : lines_of(dialogue)) {
    auto sp = line.find(' ');
    if (sp != std::string::npos && line.compare(sp + 1, 10, "Counselor:") == 0) ++count;
  }
  ojson out;
  for (int i = 1; i <= count; ++i) {
    json list = json::array();
    const int n = d.between(0, 2);
    for (int k = 0; k < n; ++k) {
      // Q_Identify and the simple reflections dominate, as in real transcripts.
      std::string_view t = d.chance(0.35) ? (d.chance(0.5) ? "Q_Identify" : "R_Emo") : d.from(kTags);
      if (std::find(list.begin(), list.end(), std::string(t)) == list.end()) list.push_back(std::string(t));
    }
    out["counselor_" + std::to_string(i)] = list;
  }
  return out.dump(2);
}

std::string target(const std::string& prompt, Dice& d) {
  const auto dialogue = section(prompt, "Counseling Session Transcript\n", "\n\nOutput Format");
  std::vector<std::string> client, voiced;
  const std::string voiced_prefix = std::string("Client: ") + kVoicedThought;
  for (const auto& line : lines_of(dialogue)) {
    if (line.rfind(voiced_prefix, 0) == 0) voiced.push_back(line.substr(voiced_prefix.size()));
    if (line.rfind("Client: ", 0) == 0) client.push_back(line.substr(8));
  }
  ojson out;
  if (!voiced.empty() && d.chance(0.8)) {
    out["therapeutic_targets"] = voiced[d.pick(voiced.size())];
    return out.dump();
  }
  out["therapeutic_targets"] = client.empty() ? std::string("the belief that nothing will change")
                                              : "Working through the thought: " + sentence_body(client[d.pick(client.size())]);
  return out.dump();
}

std::string head_to_head(const std::string& prompt, Dice& d) {
  const auto block = section(prompt, "answer \"A\", \"B\", or \"Tie\".\n", "\nOutput Format");
  ojson out;
  for (const auto& line : lines_of(block)) {
    if (line.rfind("- ", 0) != 0) continue;
    auto name = line.substr(2, line.find(':') == std::string::npos ? std::string::npos : line.find(':') - 2);
    const double r = static_cast<double>(d.pick(100)) / 100.0;
    out[name] = r < 0.45 ? "A" : r < 0.85 ? "B" : "Tie";
  }
  return out.dump(2);
}

}  // namespace

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw HttpStatusError(400, "no messages");
  const std::string& prompt = request.messages.front().content;
  const std::string& tag = request.request_tag;
  ChatResponse response;
  for (int i = 0; i < request.n; ++i) {
    Dice d(seed_for(options_.seed, request, static_cast<std::size_t>(i)));
    std::string text;
    if (tag == prompts::tag::kDecompose) {
      text = decompose(prompt, d);
    } else if (tag == prompts::tag::kDiagnosticStage) {
      text = stage_dialogue(prompt, true, d);
    } else if (tag == prompts::tag::kInterventionStage) {
      text = stage_dialogue(prompt, false, d);
    } else if (tag == prompts::tag::kPlanner) {
      text = planner(prompt, d);
    } else if (tag == prompts::tag::kCtrs8) {
      std::optional<std::size_t> low;
      if (d.chance(options_.low_score_rate)) low = d.pick(rubrics::kCtrs8.size());
      text = score_object(rubrics::kCtrs8, "_score_reason", 5, 6, d, low, 4);
    } else if (tag == prompts::tag::kAdherence) {
      std::optional<std::size_t> low;
      if (d.chance(0.05)) low = d.pick(rubrics::kAdherence.size());
      text = score_object(rubrics::kAdherence, "_reason", 4, 5, d, low, 3);
    } else if (tag == prompts::tag::kClient) {
      text = client(prompt, d, options_.exit_rate);
    } else if (tag == prompts::tag::kCounselor) {
      text = counselor(prompt, d, options_.invalid_action_rate, request.messages.size() > 1);
    } else if (tag == prompts::tag::kEvalUtterance) {
      text = score_list(prompt, rubrics::kUtterance, d);
    } else if (tag == prompts::tag::kEvalPlan) {
      text = score_list(prompt, rubrics::kPlan, d);
    } else if (tag == prompts::tag::kCtrs7) {
      text = score_object(rubrics::kCtrs7, "_score_reason", 3, 6, d);
    } else if (tag == prompts::tag::kSrs) {
      text = srs(d);
    } else if (tag == prompts::tag::kTags) {
      text = tags(prompt, d);
    } else if (tag == prompts::tag::kTarget) {
      text = target(prompt, d);
    } else if (tag == prompts::tag::kHeadToHead) {
      text = head_to_head(prompt, d);
    } else {
      text = "I am not sure what you are asking for.";
    }
    response.completions.push_back(std::move(text));
  }
  return response;
}

}  // namespace stepforge::gateway
