#include "axeval/labels.hpp"

#include "axeval/text.hpp"

namespace axeval {

std::string_view to_string(InferenceLabel label) {
  switch (label) {
    case InferenceLabel::Entailment:
      return "Entailment";
    case InferenceLabel::Contradiction:
      return "Contradiction";
    case InferenceLabel::Neutral:
      return "Neutral";
  }
  return "Neutral";
}

std::string_view to_key(InferenceLabel label) {
  switch (label) {
    case InferenceLabel::Entailment:
      return "entailment";
    case InferenceLabel::Contradiction:
      return "contradiction";
    case InferenceLabel::Neutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<InferenceLabel> label_from_alias(std::string_view raw) {
  const std::string value = text::to_lower(text::trim(raw));
  if (value == "entailment" || value == "e") return InferenceLabel::Entailment;
  if (value == "contradiction" || value == "c") {
    return InferenceLabel::Contradiction;
  }
  if (value == "neutral" || value == "n") return InferenceLabel::Neutral;
  return std::nullopt;
}

}  // namespace axeval
