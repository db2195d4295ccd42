#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace stepforge::gateway {

/// Append-only JSONL cache of {digest, completions}. The first entry for a
/// digest wins; later duplicates in the file are ignored on load.
class ReplayStore {
 public:
  ReplayStore() = default;  // in-memory only
  explicit ReplayStore(std::filesystem::path file);

  std::optional<std::vector<std::string>> find(const std::string& digest) const;

  /// Records completions unless the digest is already present. Returns the
  /// stored completions, which may be an earlier writer's.
  std::vector<std::string> put_if_absent(const std::string& digest, const std::vector<std::string>& completions);

  std::size_t size() const;
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> entries_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace stepforge::gateway
