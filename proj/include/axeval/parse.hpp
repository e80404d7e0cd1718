#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "axeval/labels.hpp"

namespace axeval {

enum class ParseError {
  EmptyResponse,
  UnparseableLabel,
  AmbiguousLabel,
  MissingExplanation,
  UnparseableRating,
};

std::string_view to_string(ParseError error);

/// Either a parsed payload or the reason parsing failed. Parsers never
/// throw on arbitrary input; every failure is one of the ParseError values.
template <typename T>
class Parsed {
 public:
  Parsed(T value) : state_(std::move(value)) {}
  Parsed(ParseError error) : state_(error) {}

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return std::get<T>(state_); }
  const T& operator*() const { return value(); }
  const T* operator->() const { return &value(); }
  ParseError error() const { return std::get<ParseError>(state_); }

 private:
  std::variant<T, ParseError> state_;
};

struct ParsedAxiom {
  std::string knowledge_type;  // empty when the response had no type slot
  std::string axiom;
  int sentence_count = 1;

  /// Axioms are requested as one sentence; longer ones are kept whole.
  bool multi_sentence() const { return sentence_count > 1; }
};

struct ParsedLabel {
  InferenceLabel label = InferenceLabel::Neutral;
  std::string explanation;
};

struct ParsedRating {
  int rating = 1;  // 1..10
  std::string explanation;
};

/// Extracts the "Type of commonsense knowledge:" and "Commonsense knowledge:"
/// slots when present, otherwise takes the whole trimmed response as the
/// axiom.
Parsed<ParsedAxiom> parse_axiom(std::string_view raw);

/// Earliest whole-word label mention wins. The explanation is whatever
/// follows the separator after the label. A second, different label before
/// that separator is AmbiguousLabel.
Parsed<ParsedLabel> parse_label(std::string_view raw);

/// parse_label, but a missing explanation is an error: the direct-inference
/// prompt asks for "<label>: <explanation>" and the explanation is judged.
Parsed<ParsedLabel> parse_label_with_explanation(std::string_view raw);

/// First standalone integer in 1..10 (so "10" is never read as "1").
Parsed<ParsedRating> parse_rating(std::string_view raw);

/// Number of sentences, by terminal punctuation. Never less than 1 for
/// non-blank text.
int count_sentences(std::string_view text);

/// Canonical "<Label>: <explanation>" form; parse_label inverts it.
std::string format_label(InferenceLabel label, std::string_view explanation);

}  // namespace axeval
