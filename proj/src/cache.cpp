#include "axeval/cache.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "axeval/digest.hpp"
#include "axeval/gateway.hpp"

namespace axeval {

using nlohmann::json;

namespace {

std::string temperature_repr(const std::optional<double>& temperature) {
  if (!temperature) return "default";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", *temperature);
  return buffer;
}

bool valid_key(const std::string& key) {
  return key.size() == 64 &&
         key.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key_for(const CompletionRequest& request) {
  DigestBuilder digest;
  digest.add("axeval-cache-v1")
      .add(request.model.model_name)
      .add(request.prompt.text)
      .add(temperature_repr(request.model.temperature))
      .add(request.run_index);
  // Only folded in when set, so the default key is exactly the four fields.
  if (!request.model.system_message.empty()) digest.add(request.model.system_message);
  return digest.hex();
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / (key + ".json");
}

std::optional<CacheEntry> ResponseCache::lookup(const std::string& key) const {
  if (!valid_key(key)) return std::nullopt;
  std::shared_lock lock(mutex_);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const json doc = json::parse(in);
    CacheEntry entry;
    entry.key = doc.at("key").get<std::string>();
    entry.request_digest = doc.at("request_digest").get<std::string>();
    entry.raw_text = doc.at("raw_text").get<std::string>();
    entry.timestamp = doc.value("timestamp", "");
    entry.model_name = doc.value("model_name", "");
    if (entry.key != key) return std::nullopt;
    return entry;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::store(const CacheEntry& entry) {
  if (!valid_key(entry.key)) throw std::invalid_argument("invalid cache key");
  const json doc = {{"key", entry.key},
                    {"request_digest", entry.request_digest},
                    {"raw_text", entry.raw_text},
                    {"timestamp", entry.timestamp},
                    {"model_name", entry.model_name}};
  std::unique_lock lock(mutex_);
  std::ostringstream tmp_name;
  tmp_name << entry.key << ".tmp." << std::this_thread::get_id();
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("cache write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path_for(entry.key));
}

void ResponseCache::erase(const std::string& key) {
  if (!valid_key(key)) return;
  std::unique_lock lock(mutex_);
  std::error_code ignored;
  std::filesystem::remove(path_for(key), ignored);
}

}  // namespace axeval
