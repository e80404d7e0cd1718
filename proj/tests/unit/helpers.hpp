#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "axeval/dataset.hpp"

namespace axeval::unit {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "axeval") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline NliInstance instance(std::string id, std::string premise, std::string hypothesis,
                            InferenceLabel gold = InferenceLabel::Neutral) {
  return {std::move(id), std::move(premise), std::move(hypothesis), gold,
          DatasetSource::Other};
}

}  // namespace axeval::unit
