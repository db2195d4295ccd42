#include "stepforge/profile/forge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "stepforge/prompts.hpp"
#include "stepforge/util/hash.hpp"
#include "stepforge/util/parallel.hpp"

namespace stepforge::profile {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string seed_id_for(std::size_t row) {
  std::string n = std::to_string(row);
  return "seed-" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

std::optional<std::string> check_seed(const SeedRecord& s) {
  if (trim(s.persona).empty()) return "persona is empty";
  if (trim(s.negative_thought).empty()) return "negative_thought is empty";
  return std::nullopt;
}

SeedIngest ingest_jsonl(const std::string& text) {
  SeedIngest out;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  bool any = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    any = true;
    ++row;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      out.rejects.push_back({row, "not valid JSON"});
      continue;
    }
    if (!j.is_object()) {
      out.rejects.push_back({row, "not a JSON object"});
      continue;
    }
    SeedRecord s;
    bool missing = false;
    for (const char* key : {"persona", "negative_thought"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        out.rejects.push_back({row, std::string("missing ") + key});
        missing = true;
        break;
      }
    }
    if (missing) continue;
    s.persona = j["persona"].get<std::string>();
    s.negative_thought = j["negative_thought"].get<std::string>();
    s.seed_id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : seed_id_for(row);
    if (auto why = check_seed(s)) {
      out.rejects.push_back({row, *why});
      continue;
    }
    out.seeds.push_back(std::move(s));
  }
  if (!any) throw Error(ErrorCode::EmptyCorpus, "no seed rows");
  return out;
}

SeedIngest ingest_csv(const std::string& text) {
  auto rows = parse_csv(text);
  std::erase_if(rows, [](const auto& r) { return r.size() == 1 && trim(r[0]).empty(); });
  if (rows.size() < 2) throw Error(ErrorCode::EmptyCorpus, "no seed rows");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].size(); ++i) column[lower(trim(rows[0][i]))] = i;
  if (!column.contains("persona") || !column.contains("negative_thought"))
    throw Error(ErrorCode::UnreadableFile, "CSV header must name persona and negative_thought");

  SeedIngest out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    auto field = [&](const std::string& name) -> std::optional<std::string> {
      auto it = column.find(name);
      if (it == column.end() || it->second >= fields.size()) return std::nullopt;
      return fields[it->second];
    };
    SeedRecord s;
    auto persona = field("persona");
    auto thought = field("negative_thought");
    if (!persona || !thought) {
      out.rejects.push_back({r, "too few columns"});
      continue;
    }
    s.persona = *persona;
    s.negative_thought = *thought;
    auto id = field("id");
    s.seed_id = id && !trim(*id).empty() ? trim(*id) : seed_id_for(r);
    if (auto why = check_seed(s)) {
      out.rejects.push_back({r, *why});
      continue;
    }
    out.seeds.push_back(std::move(s));
  }
  return out;
}

std::string as_text(const json& v) {
  if (v.is_string()) return trim(v.get<std::string>());
  if (v.is_null()) return {};
  return v.dump();
}

std::string or_unknown(std::string s) { return s.empty() ? std::string(kUnknown) : s; }

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      rows.back().push_back(std::move(field));
      field.clear();
      rows.emplace_back();
    } else {
      field += c;
    }
  }
  if (!field.empty() || !rows.back().empty()) rows.back().push_back(std::move(field));
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

SeedIngest ingest_seeds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  if (lower(path.extension().string()) == ".csv") return ingest_csv(text);
  return ingest_jsonl(text);
}

Decomposition parse_decomposition(const json& value) {
  if (!value.is_object()) throw gateway::ParseRejected("decomposition is not an object");
  Decomposition d;
  auto field = [&](const char* key) { return value.contains(key) ? or_unknown(as_text(value[key])) : std::string(kUnknown); };
  d.surface_level_problem = field("surface_level_problem");
  d.triggering_situation = field("triggering_situation");

  if (value.contains("automatic_thoughts") && value["automatic_thoughts"].is_array()) {
    for (const auto& t : value["automatic_thoughts"])
      if (auto s = as_text(t); !s.empty()) d.automatic_thoughts.push_back(s);
  } else {
    std::string all = field("automatic_thoughts");
    std::size_t start = 0;
    while (start <= all.size()) {
      auto end = all.find(';', start);
      if (end == std::string::npos) end = all.size();
      if (auto s = trim(std::string_view(all).substr(start, end - start)); !s.empty()) d.automatic_thoughts.push_back(s);
      start = end + 1;
    }
  }
  if (d.automatic_thoughts.empty()) d.automatic_thoughts.emplace_back(kUnknown);

  if (value.contains("basic_information") && value["basic_information"].is_object())
    for (const auto& [k, v] : value["basic_information"].items()) d.basic_information[k] = or_unknown(as_text(v));
  return d;
}

Decomposition decompose(const gateway::Gateway& gw, const gateway::CallSpec& spec, const SeedRecord& seed) {
  if (auto why = check_seed(seed)) throw Error(ErrorCode::InvalidRecord, seed.seed_id + ": " + *why);
  auto request = spec.request(prompts::decompose(seed.persona, seed.negative_thought), prompts::tag::kDecompose);
  try {
    return gateway::call_structured(gw, std::move(request), gateway::JsonShape::Object, parse_decomposition,
                                    ErrorCode::DecompositionFailed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DecompositionFailed) throw;
    throw Error(ErrorCode::DecompositionFailed, seed.seed_id + ": " + e.what());
  }
}

std::vector<AttitudeStyle> assign_attitude(std::uint64_t rng_seed, std::size_t count) {
  std::vector<Style> order(kAllStyles.begin(), kAllStyles.end());
  std::mt19937_64 rng(rng_seed);
  // Fisher-Yates with raw engine output so the order does not depend on the
  // standard library's distribution implementation.
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  std::vector<AttitudeStyle> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(order[i % order.size()]);
  return out;
}

ClientProfile build_profile(const SeedRecord& seed, const Decomposition& d, AttitudeStyle attitude) {
  ClientProfile p;
  p.profile_id = util::short_id("prof", seed.seed_id + "\n" + seed.persona + "\n" + seed.negative_thought);
  p.basic_information = d.basic_information;
  auto name = d.basic_information.find("name");
  p.name = name != d.basic_information.end() && name->second != kUnknown ? name->second : "Client " + seed.seed_id;
  p.basic_information.erase("name");
  p.basic_information["persona"] = seed.persona;
  p.attitude = attitude;
  p.negative_thought = seed.negative_thought;
  p.surface_level_problem = d.surface_level_problem;
  p.triggering_situation = d.triggering_situation;
  p.automatic_thoughts = d.automatic_thoughts;
  return p;
}

ForgeResult forge_profiles(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                           const std::vector<SeedRecord>& seeds, std::uint64_t rng_seed, std::size_t workers) {
  const auto attitudes = assign_attitude(rng_seed, seeds.size());
  auto outcomes = util::parallel_map(seeds, workers, [&](const SeedRecord& s, std::size_t) { return decompose(gw, spec, s); });
  ForgeResult out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (outcomes[i].ok()) {
      out.profiles.push_back(build_profile(seeds[i], *outcomes[i].value, attitudes[i]));
      continue;
    }
    try {
      std::rethrow_exception(outcomes[i].error);
    } catch (const std::exception& e) {
      out.failures.push_back({seeds[i].seed_id, e.what()});
    }
  }
  return out;
}

}  // namespace stepforge::profile
