#include "axeval/template.hpp"

#include <algorithm>
#include <cctype>

#include "axeval/text.hpp"

namespace axeval {

namespace {

bool valid_slot_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

// Whitespace between the previous newline and `pos`, if that is all there is.
std::size_t standalone_indent(std::string_view source, std::size_t pos) {
  std::size_t start = pos;
  while (start > 0 && (source[start - 1] == ' ' || source[start - 1] == '\t')) --start;
  if (start == 0 || source[start - 1] == '\n') return pos - start;
  return std::string_view::npos;
}

// Length of the line break right after `pos` (0 at end of input), or npos
// when other text follows on the same line.
std::size_t standalone_tail(std::string_view source, std::size_t pos) {
  std::size_t end = pos;
  while (end < source.size() && (source[end] == ' ' || source[end] == '\t')) ++end;
  if (end == source.size()) return end - pos;
  if (source[end] == '\n') return end - pos + 1;
  if (source.compare(end, 2, "\r\n") == 0) return end - pos + 2;
  return std::string_view::npos;
}

}  // namespace

Template Template::parse(std::string source, std::string name) {
  Template tpl;
  tpl.name_ = std::move(name);
  tpl.source_ = std::move(source);
  const std::string_view src = tpl.source_;

  std::vector<std::vector<Node>*> stack{&tpl.nodes_};
  std::vector<std::string> open_sections;
  std::size_t pos = 0;
  auto emit_text = [&](std::string_view literal) {
    if (literal.empty()) return;
    auto& nodes = *stack.back();
    if (!nodes.empty() && nodes.back().kind == Node::Kind::Text) {
      nodes.back().value.append(literal);
    } else {
      nodes.push_back({Node::Kind::Text, std::string(literal), {}});
    }
  };

  while (pos < src.size()) {
    const std::size_t open = src.find("{{", pos);
    if (open == std::string_view::npos) {
      emit_text(src.substr(pos));
      break;
    }
    const std::size_t close = src.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw TemplateError(tpl.name_ + ": unterminated '{{' at offset " +
                          std::to_string(open));
    }
    const std::string_view tag = text::trim(src.substr(open + 2, close - open - 2));
    const bool is_section = !tag.empty() && (tag.front() == '#' || tag.front() == '/');
    std::size_t text_end = open;
    std::size_t resume = close + 2;
    if (is_section) {
      const std::size_t indent = standalone_indent(src, open);
      const std::size_t tail = standalone_tail(src, close + 2);
      if (indent != std::string_view::npos && tail != std::string_view::npos) {
        text_end = open - indent;
        resume = close + 2 + tail;
      }
    }
    emit_text(src.substr(pos, text_end - pos));
    pos = resume;

    if (!is_section) {
      if (!valid_slot_name(tag)) {
        throw TemplateError(tpl.name_ + ": invalid slot name '" + std::string(tag) + "'");
      }
      stack.back()->push_back({Node::Kind::Slot, std::string(tag), {}});
      continue;
    }
    const std::string_view section = text::trim(tag.substr(1));
    if (!valid_slot_name(section)) {
      throw TemplateError(tpl.name_ + ": invalid section name '" + std::string(section) +
                          "'");
    }
    if (tag.front() == '#') {
      stack.back()->push_back({Node::Kind::Section, std::string(section), {}});
      stack.push_back(&stack.back()->back().children);
      open_sections.emplace_back(section);
    } else {
      if (open_sections.empty() || open_sections.back() != section) {
        throw TemplateError(tpl.name_ + ": unbalanced section close '" +
                            std::string(section) + "'");
      }
      open_sections.pop_back();
      stack.pop_back();
    }
  }
  if (!open_sections.empty()) {
    throw TemplateError(tpl.name_ + ": section '" + open_sections.back() +
                        "' is never closed");
  }
  return tpl;
}

std::string_view Template::leading_text() const {
  if (!nodes_.empty() && nodes_.front().kind == Node::Kind::Text) {
    return nodes_.front().value;
  }
  return {};
}

std::string Template::render(const TemplateBindings& bindings) const {
  std::string out;
  out.reserve(source_.size() * 2);
  render_nodes(nodes_, bindings, nullptr, out);
  return out;
}

void Template::render_nodes(const std::vector<Node>& nodes,
                            const TemplateBindings& bindings, const SlotValues* scope,
                            std::string& out) const {
  for (const auto& node : nodes) {
    switch (node.kind) {
      case Node::Kind::Text:
        out += node.value;
        break;
      case Node::Kind::Slot: {
        if (scope) {
          if (auto it = scope->find(node.value); it != scope->end()) {
            out += it->second;
            break;
          }
        }
        auto it = bindings.values.find(node.value);
        if (it == bindings.values.end()) {
          throw TemplateError(name_ + ": unbound slot '" + node.value + "'");
        }
        out += it->second;
        break;
      }
      case Node::Kind::Section: {
        auto it = bindings.sections.find(node.value);
        if (it == bindings.sections.end()) {
          throw TemplateError(name_ + ": unbound section '" + node.value + "'");
        }
        for (const auto& item : it->second) render_nodes(node.children, bindings, &item, out);
        break;
      }
    }
  }
}

}  // namespace axeval
