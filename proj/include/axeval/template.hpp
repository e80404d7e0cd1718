#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace axeval {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SlotValues = std::map<std::string, std::string, std::less<>>;

/// Values for one rendering. `sections` binds each `{{#name}}...{{/name}}`
/// block to a list of scopes; the block body is emitted once per scope and
/// slots inside it resolve against that scope before falling back to
/// `values`.
struct TemplateBindings {
  SlotValues values;
  std::map<std::string, std::vector<SlotValues>, std::less<>> sections;
};

/// A `{{slot}}` template with repeatable sections. A section tag that sits
/// alone on its line swallows that line's newline, so block markup does not
/// leave blank lines in the output. Substituted values are never re-scanned
/// for placeholders.
class Template {
 public:
  static Template parse(std::string source, std::string name = "template");

  /// Throws TemplateError naming the first unbound slot or section.
  std::string render(const TemplateBindings& bindings) const;

  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }

  /// Literal text before the first tag: the instruction block.
  std::string_view leading_text() const;

 private:
  struct Node {
    enum class Kind { Text, Slot, Section } kind = Kind::Text;
    std::string value;  // literal text, slot name or section name
    std::vector<Node> children;
  };

  void render_nodes(const std::vector<Node>& nodes, const TemplateBindings& bindings,
                    const SlotValues* scope, std::string& out) const;

  std::string name_;
  std::string source_;
  std::vector<Node> nodes_;
};

}  // namespace axeval
