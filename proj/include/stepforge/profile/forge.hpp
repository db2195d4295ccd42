#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/structured_call.hpp"

namespace stepforge::profile {

struct SeedRecord {
  std::string seed_id;
  std::string persona;
  std::string negative_thought;

  bool operator==(const SeedRecord&) const = default;
};

struct SeedReject {
  std::size_t row = 0;  // 1-based data row
  std::string reason;
};

struct SeedIngest {
  std::vector<SeedRecord> seeds;
  std::vector<SeedReject> rejects;
};

/// Loads seeds from JSONL, or CSV when the file ends in ".csv". CSV needs a
/// header naming persona and negative_thought; an optional id column sets
/// seed_id, otherwise it is "seed-<row>".
/// Errors: UnreadableFile, EmptyCorpus (no rows at all).
SeedIngest ingest_seeds(const std::filesystem::path& path);

/// Splits a CSV document into rows of fields (RFC 4180 quoting).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct Decomposition {
  std::string surface_level_problem;
  std::string triggering_situation;
  std::vector<std::string> automatic_thoughts;
  std::map<std::string, std::string> basic_information;
};

/// Maps decomposition JSON to its fields. Absent or blank elements become
/// "unknown"; automatic thoughts are split on ';'.
Decomposition parse_decomposition(const json& value);

/// One gateway call. Error: DecompositionFailed (after one regeneration).
Decomposition decompose(const gateway::Gateway& gw, const gateway::CallSpec& spec, const SeedRecord& seed);

/// Deterministic, uniform style assignment: round-robin over a seeded
/// shuffle of the eight styles. Shorter lists are prefixes of longer ones.
std::vector<AttitudeStyle> assign_attitude(std::uint64_t rng_seed, std::size_t count);

ClientProfile build_profile(const SeedRecord& seed, const Decomposition& d, AttitudeStyle attitude);

struct ForgeFailure {
  std::string seed_id;
  std::string message;
};

struct ForgeResult {
  std::vector<ClientProfile> profiles;
  std::vector<ForgeFailure> failures;
};

/// Decomposes every seed concurrently. Profiles keep seed order; failed
/// seeds are reported and skipped. Attitudes are assigned by seed position.
ForgeResult forge_profiles(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                           const std::vector<SeedRecord>& seeds, std::uint64_t rng_seed, std::size_t workers);

}  // namespace stepforge::profile
