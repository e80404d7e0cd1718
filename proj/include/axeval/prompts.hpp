#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "axeval/dataset.hpp"
#include "axeval/labels.hpp"
#include "axeval/template.hpp"

namespace axeval {

enum class PromptKind { P1, P2, P3, JudgeHelp, JudgeCons };

std::string_view to_string(PromptKind kind);

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One in-context example. `knowledge_type` fills the P1 "{type}" slot and
/// is free text; `label` is only needed by the P2 exemplar.
struct FewShotExample {
  std::string premise;
  std::string hypothesis;
  std::string knowledge_type;
  std::string axiom;
  std::optional<InferenceLabel> label;
};

struct RenderedPrompt {
  PromptKind kind = PromptKind::P1;
  std::string text;
  std::string slot_digest;  // sha256 over every substituted value
};

/// Reads one exemplar per line: {premise, hypothesis, type, axiom, label?}.
std::vector<FewShotExample> read_exemplars(std::istream& in);

/// The five templates plus the default exemplars, loaded from a prompt
/// directory (p1.txt, p2.txt, p3.txt, judge_help.txt, judge_cons.txt,
/// exemplars/p1.jsonl, exemplars/p2.jsonl) or from the copy compiled into
/// the library.
class PromptLibrary {
 public:
  static constexpr std::size_t kDefaultP1Exemplars = 3;
  static constexpr std::size_t kDefaultP2Exemplars = 1;

  static PromptLibrary load(const std::filesystem::path& dir);
  static PromptLibrary builtin();

  /// Writes the built-in prompt set to `dir` in the loadable layout.
  static void write_builtin(const std::filesystem::path& dir);

  RenderedPrompt render_p1(const NliInstance& instance,
                           std::span<const FewShotExample> exemplars) const;
  RenderedPrompt render_p1(const NliInstance& instance) const {
    return render_p1(instance, p1_exemplars_);
  }

  RenderedPrompt render_p2(const NliInstance& instance, std::string_view axiom,
                           std::span<const FewShotExample> exemplars) const;
  RenderedPrompt render_p2(const NliInstance& instance, std::string_view axiom) const {
    return render_p2(instance, axiom, p2_exemplars_);
  }

  RenderedPrompt render_p3(const NliInstance& instance) const;

  RenderedPrompt render_judge_helpfulness(const NliInstance& instance,
                                          std::string_view axiom,
                                          InferenceLabel gold) const;

  RenderedPrompt render_judge_consistency(const NliInstance& instance,
                                          std::string_view axiom_first,
                                          std::string_view axiom_j) const;

  const Template& template_for(PromptKind kind) const;
  const std::vector<FewShotExample>& p1_exemplars() const { return p1_exemplars_; }
  const std::vector<FewShotExample>& p2_exemplars() const { return p2_exemplars_; }

  void set_exemplar_counts(std::size_t p1, std::size_t p2);

  /// sha256 of every template and exemplar file, keyed by relative path.
  const std::map<std::string, std::string>& file_digests() const { return digests_; }

 private:
  static PromptLibrary from_files(const std::map<std::string, std::string>& files);

  std::map<PromptKind, Template> templates_;
  std::vector<FewShotExample> p1_exemplars_;
  std::vector<FewShotExample> p2_exemplars_;
  std::size_t p1_count_ = kDefaultP1Exemplars;
  std::size_t p2_count_ = kDefaultP2Exemplars;
  std::map<std::string, std::string> digests_;
};

}  // namespace axeval
