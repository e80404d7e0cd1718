#include "axeval/parse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

#include "axeval/text.hpp"

namespace axeval {

std::string_view to_string(ParseError error) {
  switch (error) {
    case ParseError::EmptyResponse:
      return "EmptyResponse";
    case ParseError::UnparseableLabel:
      return "UnparseableLabel";
    case ParseError::AmbiguousLabel:
      return "AmbiguousLabel";
    case ParseError::MissingExplanation:
      return "MissingExplanation";
    case ParseError::UnparseableRating:
      return "UnparseableRating";
  }
  return "EmptyResponse";
}

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view strip_leading(std::string_view s, std::string_view chars) {
  while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// "**Commonsense knowledge:** text" -> "text" when the line opens with
// `label` followed by a colon (markdown emphasis and list markers allowed).
std::optional<std::string_view> match_slot(std::string_view line, std::string_view label) {
  std::string_view s = strip_leading(text::trim(line), " \t*-#>_");
  if (!text::istarts_with(s, label)) return std::nullopt;
  s = strip_leading(s.substr(label.size()), " \t*_");
  if (s.empty() || s.front() != ':') return std::nullopt;
  s = strip_leading(s.substr(1), " \t*_");
  return text::trim(s);
}

constexpr std::string_view kTypeSlot = "type of commonsense knowledge";
constexpr std::array<std::string_view, 2> kAxiomSlots = {"commonsense knowledge",
                                                         "common sense knowledge"};

std::optional<std::string_view> match_axiom_slot(std::string_view line) {
  for (auto label : kAxiomSlots) {
    if (auto rest = match_slot(line, label)) return rest;
  }
  return std::nullopt;
}

void append_piece(std::string& out, std::string_view piece) {
  piece = text::trim(piece);
  if (piece.empty()) return;
  if (!out.empty()) out.push_back(' ');
  out.append(piece);
}

struct LabelHit {
  InferenceLabel label;
  std::size_t begin;
  std::size_t end;
};

std::vector<LabelHit> find_label_words(std::string_view raw) {
  static constexpr std::array<std::pair<std::string_view, InferenceLabel>, 3> kWords = {{
      {"entailment", InferenceLabel::Entailment},
      {"contradiction", InferenceLabel::Contradiction},
      {"neutral", InferenceLabel::Neutral},
  }};
  const std::string lowered = text::to_lower(raw);
  std::vector<LabelHit> hits;
  for (const auto& [word, label] : kWords) {
    std::size_t pos = lowered.find(word);
    while (pos != std::string::npos) {
      const std::size_t end = pos + word.size();
      const bool left_ok = pos == 0 || !is_alpha(lowered[pos - 1]);
      const bool right_ok = end == lowered.size() || !is_alpha(lowered[end]);
      if (left_ok && right_ok) hits.push_back({label, pos, end});
      pos = lowered.find(word, pos + 1);
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const LabelHit& a, const LabelHit& b) { return a.begin < b.begin; });
  return hits;
}

}  // namespace

int count_sentences(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return 0;
  int count = 0;
  std::size_t i = 0;
  bool pending_text = false;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      if (!is_space(c)) pending_text = true;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
    std::size_t k = j;
    while (k < s.size() && (s[k] == '"' || s[k] == '\'' || s[k] == ')')) ++k;
    bool terminal = false;
    if (k == s.size()) {
      terminal = true;
    } else if (is_space(s[k])) {
      std::size_t next = k;
      while (next < s.size() && is_space(s[next])) ++next;
      terminal = next == s.size() || std::isupper(static_cast<unsigned char>(s[next])) ||
                 is_digit(s[next]) || s[next] == '"';
    }
    if (terminal && pending_text) {
      ++count;
      pending_text = false;
    }
    i = k;
  }
  if (pending_text) ++count;
  return count == 0 ? 1 : count;
}

Parsed<ParsedAxiom> parse_axiom(std::string_view raw) {
  const std::string_view trimmed = text::trim(raw);
  if (trimmed.empty()) return ParseError::EmptyResponse;

  std::optional<std::string> type;
  std::optional<std::string> axiom;
  std::string unlabeled;
  bool in_axiom = false;
  for (std::string_view line : split_lines(trimmed)) {
    if (auto rest = match_slot(line, kTypeSlot)) {
      if (!type) type = std::string(*rest);
      in_axiom = false;
      continue;
    }
    if (auto rest = match_axiom_slot(line)) {
      if (!axiom) {
        axiom = std::string();
        append_piece(*axiom, *rest);
        in_axiom = true;
      } else {
        in_axiom = false;
      }
      continue;
    }
    if (in_axiom) {
      append_piece(*axiom, line);
    } else {
      append_piece(unlabeled, line);
    }
  }

  ParsedAxiom parsed;
  parsed.knowledge_type = type.value_or("");
  if (axiom) {
    parsed.axiom = std::move(*axiom);
  } else if (type) {
    parsed.axiom = std::move(unlabeled);
  } else {
    parsed.axiom = std::string(trimmed);
  }
  if (text::is_blank(parsed.axiom)) return ParseError::EmptyResponse;
  parsed.sentence_count = count_sentences(parsed.axiom);
  return parsed;
}

Parsed<ParsedLabel> parse_label(std::string_view raw) {
  if (text::is_blank(raw)) return ParseError::EmptyResponse;
  const auto hits = find_label_words(raw);
  if (hits.empty()) return ParseError::UnparseableLabel;
  const LabelHit& first = hits.front();

  const std::size_t boundary = raw.find_first_of(":.!?\n", first.end);
  for (const auto& hit : hits) {
    if (hit.begin >= boundary) break;
    if (hit.label != first.label) return ParseError::AmbiguousLabel;
  }

  ParsedLabel parsed;
  parsed.label = first.label;
  std::string_view rest = strip_leading(raw.substr(first.end), " \t*_\"')]");
  if (!rest.empty() && std::string_view(":.-,;").find(rest.front()) != std::string_view::npos) {
    rest.remove_prefix(1);
  } else {
    const std::size_t line_end = rest.find('\n');
    const std::size_t colon = rest.substr(0, line_end).find(':');
    if (colon != std::string_view::npos) rest.remove_prefix(colon + 1);
  }
  parsed.explanation = std::string(text::trim(strip_leading(rest, " \t*_")));
  return parsed;
}

Parsed<ParsedLabel> parse_label_with_explanation(std::string_view raw) {
  auto parsed = parse_label(raw);
  if (parsed && parsed->explanation.empty()) return ParseError::MissingExplanation;
  return parsed;
}

Parsed<ParsedRating> parse_rating(std::string_view raw) {
  if (text::is_blank(raw)) return ParseError::EmptyResponse;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_digit(raw[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < raw.size() && is_digit(raw[i])) ++i;
    const std::size_t end = i;
    const bool left_ok = begin == 0 || !is_alnum(raw[begin - 1]);
    const bool right_ok = end == raw.size() || !is_alnum(raw[end]);
    const bool decimal_tail =
        end + 1 < raw.size() && raw[end] == '.' && is_digit(raw[end + 1]);
    const bool decimal_head =
        begin >= 2 && raw[begin - 1] == '.' && is_digit(raw[begin - 2]);
    if (!left_ok || !right_ok || decimal_tail || decimal_head || end - begin > 2) continue;
    const int value = std::stoi(std::string(raw.substr(begin, end - begin)));
    if (value < 1 || value > 10) continue;

    ParsedRating parsed;
    parsed.rating = value;
    std::string_view rest = text::trim(raw.substr(end));
    for (std::string_view scale : {"/10", "/ 10", "out of 10"}) {
      if (text::istarts_with(rest, scale)) {
        rest.remove_prefix(scale.size());
        break;
      }
    }
    parsed.explanation = std::string(text::trim(strip_leading(rest, " \t:.-,;)*_")));
    return parsed;
  }
  return ParseError::UnparseableRating;
}

std::string format_label(InferenceLabel label, std::string_view explanation) {
  std::string out(to_string(label));
  if (!explanation.empty()) {
    out += ": ";
    out += explanation;
  }
  return out;
}

}  // namespace axeval
