#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axeval/labels.hpp"

namespace axeval {

enum class DatasetFormat { SnliJsonl, AnliJsonl, GenericJsonl };
enum class DatasetSource { Snli, Anli, Other };

/// Parses "snli-jsonl" / "anli-jsonl" / "generic-jsonl".
DatasetFormat parse_dataset_format(std::string_view name);
std::string_view to_string(DatasetFormat format);
std::string_view to_string(DatasetSource source);

struct NliInstance {
  std::string id;
  std::string premise;
  std::string hypothesis;
  InferenceLabel gold_label = InferenceLabel::Neutral;
  DatasetSource source = DatasetSource::Other;

  friend bool operator==(const NliInstance&, const NliInstance&) = default;
};

struct ClassCounts {
  std::size_t entailment = 0;
  std::size_t contradiction = 0;
  std::size_t neutral = 0;
  std::size_t total = 0;

  static constexpr ClassCounts of(std::size_t e, std::size_t c, std::size_t n) {
    return {e, c, n, e + c + n};
  }
  std::size_t count(InferenceLabel label) const;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Per-class sample sizes used for the SNLI and ANLI evaluation sets.
inline constexpr ClassCounts kSnliTargets = ClassCounts::of(689, 651, 660);
inline constexpr ClassCounts kAnliTargets = ClassCounts::of(771, 585, 644);

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what,
                        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(what), line_(line) {}
  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

class InsufficientClassError : public DatasetError {
 public:
  InsufficientClassError(InferenceLabel label, std::size_t available,
                         std::size_t requested);
  InferenceLabel label() const { return label_; }
  std::size_t available() const { return available_; }
  std::size_t requested() const { return requested_; }
  std::size_t shortfall() const { return requested_ - available_; }

 private:
  InferenceLabel label_;
  std::size_t available_;
  std::size_t requested_;
};

struct SkippedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct LoadedDataset {
  std::vector<NliInstance> instances;
  std::vector<SkippedLine> skipped;
  std::size_t line_count = 0;
};

/// Reads line-delimited JSON. Lines whose label is missing or outside the
/// alias set (SNLI "-" included), blank lines, empty texts and duplicate ids
/// are skipped and reported; malformed JSON aborts with the line number.
/// Throws DatasetError when nothing valid remains.
LoadedDataset read_dataset(std::istream& in, DatasetFormat format);
LoadedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Seeded uniform sampling without replacement inside each class. The
/// result keeps the input order of the chosen instances and is a pure
/// function of (instances, target, seed).
std::vector<NliInstance> sample_stratified(std::span<const NliInstance> instances,
                                           const ClassCounts& target,
                                           std::uint64_t seed);

ClassCounts class_distribution(std::span<const NliInstance> instances);

void write_generic_jsonl(std::ostream& out, std::span<const NliInstance> instances);
void save_generic_jsonl(const std::filesystem::path& path,
                        std::span<const NliInstance> instances);

}  // namespace axeval
