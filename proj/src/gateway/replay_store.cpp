#include "stepforge/gateway/replay_store.hpp"

#include <fstream>

#include <json.hpp>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/error.hpp"

namespace stepforge::gateway {

ReplayStore::ReplayStore(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  for (const auto& entry : read_jsonl(*file_)) {
    if (!entry.contains("digest") || !entry.contains("completions"))
      throw Error(ErrorCode::InvalidRecord, "replay entry without digest/completions in " + file_->string());
    entries_.try_emplace(entry["digest"].get<std::string>(),
                         entry["completions"].get<std::vector<std::string>>());
  }
}

std::optional<std::vector<std::string>> ReplayStore::find(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(digest); it != entries_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> ReplayStore::put_if_absent(const std::string& digest,
                                                    const std::vector<std::string>& completions) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.try_emplace(digest, completions);
  if (inserted && file_) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot append to " + file_->string());
    out << nlohmann::json{{"digest", digest}, {"completions", completions}}.dump() << '\n';
  }
  return it->second;
}

std::size_t ReplayStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace stepforge::gateway
