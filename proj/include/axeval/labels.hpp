#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace axeval {

/// The three-way NLI decision for a premise/hypothesis pair.
enum class InferenceLabel { Entailment, Contradiction, Neutral };

inline constexpr std::array<InferenceLabel, 3> kAllLabels = {
    InferenceLabel::Entailment, InferenceLabel::Contradiction,
    InferenceLabel::Neutral};

constexpr std::size_t label_index(InferenceLabel label) {
  return static_cast<std::size_t>(label);
}

/// Canonical capitalized name ("Entailment", ...).
std::string_view to_string(InferenceLabel label);

/// Lowercase name used in the generic-jsonl interchange format.
std::string_view to_key(InferenceLabel label);

/// Accepts the full label names and the single-letter ANLI aliases
/// (e/c/n), case-insensitively, with surrounding whitespace ignored.
/// Returns nullopt for anything else, including SNLI's "-".
std::optional<InferenceLabel> label_from_alias(std::string_view text);

}  // namespace axeval
