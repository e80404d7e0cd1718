#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>

namespace axeval {

struct CompletionRequest;

struct CacheEntry {
  std::string key;
  std::string request_digest;
  std::string raw_text;
  std::string timestamp;  // UTC, ISO 8601
  std::string model_name;
};

/// Content-addressed directory of `{key}.json` files. Reads run
/// concurrently; writes are serialized and land atomically via rename.
/// An unreadable or inconsistent entry behaves as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_for(const CompletionRequest& request);

  std::optional<CacheEntry> lookup(const std::string& key) const;
  void store(const CacheEntry& entry);
  void erase(const std::string& key);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace axeval
