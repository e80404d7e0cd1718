#include "axeval/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "axeval/digest.hpp"
#include "axeval/text.hpp"
#include "builtin_prompts.hpp"

namespace axeval {

using nlohmann::json;

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::P1:
      return "P1";
    case PromptKind::P2:
      return "P2";
    case PromptKind::P3:
      return "P3";
    case PromptKind::JudgeHelp:
      return "JudgeHelp";
    case PromptKind::JudgeCons:
      return "JudgeCons";
  }
  return "P1";
}

namespace {

constexpr std::pair<PromptKind, const char*> kTemplateFiles[] = {
    {PromptKind::P1, "p1.txt"},
    {PromptKind::P2, "p2.txt"},
    {PromptKind::P3, "p3.txt"},
    {PromptKind::JudgeHelp, "judge_help.txt"},
    {PromptKind::JudgeCons, "judge_cons.txt"},
};
constexpr const char* kP1Exemplars = "exemplars/p1.jsonl";
constexpr const char* kP2Exemplars = "exemplars/p2.jsonl";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot read prompt file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void require_text(std::string_view value, std::string_view what) {
  if (text::is_blank(value)) {
    throw PromptError(std::string(what) + " must not be empty");
  }
}

RenderedPrompt finish(PromptKind kind, const Template& tpl,
                      const TemplateBindings& bindings) {
  DigestBuilder digest;
  digest.add(to_string(kind));
  for (const auto& [slot, value] : bindings.values) digest.add(slot).add(value);
  for (const auto& [section, items] : bindings.sections) {
    digest.add("#" + section).add(static_cast<long long>(items.size()));
    for (const auto& item : items) {
      for (const auto& [slot, value] : item) digest.add(slot).add(value);
    }
  }
  try {
    return {kind, tpl.render(bindings), digest.hex()};
  } catch (const TemplateError& e) {
    throw PromptError(e.what());
  }
}

void check_exemplar_count(std::span<const FewShotExample> exemplars,
                          std::size_t expected, std::string_view prompt) {
  if (exemplars.size() != expected) {
    throw PromptError(std::string(prompt) + " expects " + std::to_string(expected) +
                      " exemplars, got " + std::to_string(exemplars.size()));
  }
}

}  // namespace

std::vector<FewShotExample> read_exemplars(std::istream& in) {
  std::vector<FewShotExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw PromptError("exemplar line " + std::to_string(line_no) + ": " + e.what());
    }
    FewShotExample example;
    example.premise = object.value("premise", "");
    example.hypothesis = object.value("hypothesis", "");
    example.knowledge_type = object.value("type", "");
    example.axiom = object.value("axiom", "");
    if (auto it = object.find("label"); it != object.end() && it->is_string()) {
      example.label = label_from_alias(it->get<std::string>());
      if (!example.label) {
        throw PromptError("exemplar line " + std::to_string(line_no) +
                          ": unknown label " + it->dump());
      }
    }
    out.push_back(std::move(example));
  }
  return out;
}

PromptLibrary PromptLibrary::from_files(const std::map<std::string, std::string>& files) {
  PromptLibrary library;
  auto fetch = [&](const std::string& name) -> const std::string& {
    auto it = files.find(name);
    if (it == files.end()) throw PromptError("prompt set is missing " + name);
    return it->second;
  };
  for (const auto& [kind, file] : kTemplateFiles) {
    const std::string& source = fetch(file);
    try {
      library.templates_.emplace(kind, Template::parse(source, file));
    } catch (const TemplateError& e) {
      throw PromptError(e.what());
    }
    library.digests_[file] = sha256_hex(source);
  }
  for (const char* file : {kP1Exemplars, kP2Exemplars}) {
    const std::string& source = fetch(file);
    std::istringstream in(source);
    auto exemplars = read_exemplars(in);
    (file == kP1Exemplars ? library.p1_exemplars_ : library.p2_exemplars_) =
        std::move(exemplars);
    library.digests_[file] = sha256_hex(source);
  }
  return library;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& [kind, file] : kTemplateFiles) files[file] = read_file(dir / file);
  for (const char* file : {kP1Exemplars, kP2Exemplars}) files[file] = read_file(dir / file);
  return from_files(files);
}

PromptLibrary PromptLibrary::builtin() { return from_files(detail::builtin_prompt_files()); }

void PromptLibrary::write_builtin(const std::filesystem::path& dir) {
  for (const auto& [name, content] : detail::builtin_prompt_files()) {
    const auto path = dir / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw PromptError("cannot write " + path.string());
  }
}

void PromptLibrary::set_exemplar_counts(std::size_t p1, std::size_t p2) {
  p1_count_ = p1;
  p2_count_ = p2;
}

const Template& PromptLibrary::template_for(PromptKind kind) const {
  return templates_.at(kind);
}

RenderedPrompt PromptLibrary::render_p1(const NliInstance& instance,
                                        std::span<const FewShotExample> exemplars) const {
  check_exemplar_count(exemplars, p1_count_, "P1");
  TemplateBindings bindings;
  auto& items = bindings.sections["examples"];
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto& ex = exemplars[i];
    const std::string where = "P1 exemplar " + std::to_string(i + 1) + " ";
    require_text(ex.premise, where + "premise");
    require_text(ex.hypothesis, where + "hypothesis");
    require_text(ex.knowledge_type, where + "knowledge type");
    require_text(ex.axiom, where + "axiom");
    items.push_back({{"premise", ex.premise},
                     {"hypothesis", ex.hypothesis},
                     {"type", ex.knowledge_type},
                     {"axiom", ex.axiom}});
  }
  bindings.values = {{"premise", instance.premise}, {"hypothesis", instance.hypothesis}};
  return finish(PromptKind::P1, template_for(PromptKind::P1), bindings);
}

RenderedPrompt PromptLibrary::render_p2(const NliInstance& instance,
                                        std::string_view axiom,
                                        std::span<const FewShotExample> exemplars) const {
  require_text(axiom, "P2 axiom");
  check_exemplar_count(exemplars, p2_count_, "P2");
  TemplateBindings bindings;
  auto& items = bindings.sections["examples"];
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto& ex = exemplars[i];
    const std::string where = "P2 exemplar " + std::to_string(i + 1) + " ";
    require_text(ex.premise, where + "premise");
    require_text(ex.hypothesis, where + "hypothesis");
    require_text(ex.axiom, where + "axiom");
    if (!ex.label) throw PromptError(where + "label must be set");
    items.push_back({{"premise", ex.premise},
                     {"hypothesis", ex.hypothesis},
                     {"axiom", ex.axiom},
                     {"label", std::string(to_string(*ex.label))}});
  }
  bindings.values = {{"premise", instance.premise},
                     {"hypothesis", instance.hypothesis},
                     {"axiom", std::string(axiom)}};
  return finish(PromptKind::P2, template_for(PromptKind::P2), bindings);
}

RenderedPrompt PromptLibrary::render_p3(const NliInstance& instance) const {
  TemplateBindings bindings;
  bindings.values = {{"premise", instance.premise}, {"hypothesis", instance.hypothesis}};
  return finish(PromptKind::P3, template_for(PromptKind::P3), bindings);
}

RenderedPrompt PromptLibrary::render_judge_helpfulness(const NliInstance& instance,
                                                       std::string_view axiom,
                                                       InferenceLabel gold) const {
  require_text(axiom, "helpfulness judge axiom");
  TemplateBindings bindings;
  bindings.values = {{"premise", instance.premise},
                     {"hypothesis", instance.hypothesis},
                     {"axiom", std::string(axiom)},
                     {"label", std::string(to_string(gold))}};
  return finish(PromptKind::JudgeHelp, template_for(PromptKind::JudgeHelp), bindings);
}

RenderedPrompt PromptLibrary::render_judge_consistency(const NliInstance& instance,
                                                       std::string_view axiom_first,
                                                       std::string_view axiom_j) const {
  require_text(axiom_first, "consistency judge first axiom");
  require_text(axiom_j, "consistency judge j-th axiom");
  TemplateBindings bindings;
  bindings.values = {{"premise", instance.premise},
                     {"hypothesis", instance.hypothesis},
                     {"axiom_first", std::string(axiom_first)},
                     {"axiom_j", std::string(axiom_j)}};
  return finish(PromptKind::JudgeCons, template_for(PromptKind::JudgeCons), bindings);
}

}  // namespace axeval
