#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "axeval/dataset.hpp"
#include "helpers.hpp"

using namespace axeval;

namespace {

LoadedDataset read(const std::string& text, DatasetFormat format) {
  std::istringstream in(text);
  return read_dataset(in, format);
}

std::vector<NliInstance> synthetic(std::size_t per_class) {
  std::vector<NliInstance> out;
  for (std::size_t i = 0; i < per_class * 3; ++i) {
    out.push_back(unit::instance("s" + std::to_string(i), "premise " + std::to_string(i),
                                 "hypothesis", kAllLabels[i % 3]));
  }
  return out;
}

}  // namespace

TEST_CASE("labels accept full names and ANLI letters") {
  CHECK(label_from_alias("entailment") == InferenceLabel::Entailment);
  CHECK(label_from_alias(" CONTRADICTION ") == InferenceLabel::Contradiction);
  CHECK(label_from_alias("n") == InferenceLabel::Neutral);
  CHECK(label_from_alias("c") == InferenceLabel::Contradiction);
  CHECK_FALSE(label_from_alias("-"));
  CHECK_FALSE(label_from_alias(""));
  CHECK_FALSE(label_from_alias("entails"));
}

TEST_CASE("snli lines map fields and drop the '-' label") {
  const auto loaded = read(
      R"({"sentence1": "A man sleeps.", "sentence2": "A man rests.", "gold_label": "entailment", "pairID": "p1"})"
      "\n"
      R"({"sentence1": "A dog runs.", "sentence2": "A cat runs.", "gold_label": "-", "pairID": "p2"})"
      "\n",
      DatasetFormat::SnliJsonl);
  REQUIRE(loaded.instances.size() == 1);
  CHECK(loaded.instances[0].id == "p1");
  CHECK(loaded.instances[0].gold_label == InferenceLabel::Entailment);
  CHECK(loaded.instances[0].source == DatasetSource::Snli);
  REQUIRE(loaded.skipped.size() == 1);
  CHECK(loaded.skipped[0].line == 2);
  CHECK(loaded.instances.size() + loaded.skipped.size() == loaded.line_count);
}

TEST_CASE("anli letter labels and native ids") {
  const auto loaded = read(
      R"({"premise": "It rained all day.", "hypothesis": "The ground is dry.", "label": "c", "uid": "a-7"})"
      "\n",
      DatasetFormat::AnliJsonl);
  REQUIRE(loaded.instances.size() == 1);
  CHECK(loaded.instances[0].gold_label == InferenceLabel::Contradiction);
  CHECK(loaded.instances[0].id == "a-7");
  CHECK(loaded.instances[0].source == DatasetSource::Anli);
}

TEST_CASE("ids fall back to source and line number") {
  const auto loaded = read(
      "\n"
      R"({"premise": "P", "hypothesis": "H", "label": "neutral"})"
      "\n",
      DatasetFormat::GenericJsonl);
  REQUIRE(loaded.instances.size() == 1);
  CHECK(loaded.instances[0].id == "other:2");
  CHECK(loaded.skipped.size() == 1);
  CHECK(loaded.line_count == 2);
}

TEST_CASE("skip reasons are reported per line") {
  const auto loaded = read(
      R"({"premise": "P", "hypothesis": "H", "label": "neutral", "id": "x"})"
      "\n"
      R"({"premise": "P", "hypothesis": "H", "id": "y"})"
      "\n"
      R"({"premise": "  ", "hypothesis": "H", "label": "e", "id": "z"})"
      "\n"
      R"({"premise": "P", "hypothesis": "H", "label": "entailment", "id": "x"})"
      "\n"
      R"({"premise": "P", "hypothesis": "", "label": "entailment", "id": "w"})"
      "\n",
      DatasetFormat::GenericJsonl);
  CHECK(loaded.instances.size() == 1);
  REQUIRE(loaded.skipped.size() == 4);
  CHECK(loaded.skipped[0].reason == "missing label");
  CHECK(loaded.skipped[1].reason == "empty premise");
  CHECK(loaded.skipped[2].reason.find("duplicate id") == 0);
  CHECK(loaded.skipped[3].reason == "empty hypothesis");
}

TEST_CASE("texts are trimmed") {
  const auto loaded = read(R"({"premise": "  P. ", "hypothesis": "\tH.\n", "label": "e"})",
                           DatasetFormat::GenericJsonl);
  CHECK(loaded.instances[0].premise == "P.");
  CHECK(loaded.instances[0].hypothesis == "H.");
}

TEST_CASE("malformed JSON names the line") {
  try {
    read(R"({"premise": "P", "hypothesis": "H", "label": "e"})"
         "\n{not json\n",
         DatasetFormat::GenericJsonl);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    REQUIRE(e.line());
    CHECK(*e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(read("[1, 2]\n", DatasetFormat::GenericJsonl), DatasetError);
}

TEST_CASE("zero valid instances and unreadable files are errors") {
  CHECK_THROWS_AS(read(R"({"premise": "P", "hypothesis": "H", "label": "-"})",
                       DatasetFormat::GenericJsonl),
                  DatasetError);
  CHECK_THROWS_AS(read("", DatasetFormat::GenericJsonl), DatasetError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.jsonl", DatasetFormat::GenericJsonl),
                  DatasetError);
}

TEST_CASE("format names") {
  CHECK(parse_dataset_format("snli-jsonl") == DatasetFormat::SnliJsonl);
  CHECK(parse_dataset_format("anli-jsonl") == DatasetFormat::AnliJsonl);
  CHECK(parse_dataset_format("generic-jsonl") == DatasetFormat::GenericJsonl);
  CHECK_THROWS_AS(parse_dataset_format("csv"), DatasetError);
}

TEST_CASE("class_distribution") {
  CHECK(class_distribution({}) == ClassCounts{0, 0, 0, 0});
  const auto three = synthetic(1);
  CHECK(class_distribution(three) == ClassCounts::of(1, 1, 1));
}

TEST_CASE("stratified sampling hits targets deterministically") {
  const auto pool = synthetic(10);
  const ClassCounts target = ClassCounts::of(2, 2, 2);
  const auto a = sample_stratified(pool, target, 1);
  const auto b = sample_stratified(pool, target, 2);
  CHECK(class_distribution(a) == target);
  CHECK(class_distribution(b) == target);
  CHECK(sample_stratified(pool, target, 1) == a);

  std::set<std::string> ids;
  for (const auto& x : pool) ids.insert(x.id);
  std::set<std::string> picked;
  for (const auto& x : a) {
    CHECK(ids.count(x.id) == 1);
    picked.insert(x.id);
  }
  CHECK(picked.size() == a.size());

  CHECK(sample_stratified(pool, ClassCounts{}, 5).empty());
}

TEST_CASE("sampling shortfall names the class") {
  const auto pool = synthetic(3);
  try {
    sample_stratified(pool, ClassCounts::of(1, 5, 1), 0);
    FAIL("expected InsufficientClassError");
  } catch (const InsufficientClassError& e) {
    CHECK(e.label() == InferenceLabel::Contradiction);
    CHECK(e.shortfall() == 2);
    CHECK(std::string(e.what()).find("Contradiction") != std::string::npos);
  }
}

TEST_CASE("generic jsonl round trip") {
  unit::TempDir dir;
  auto pool = synthetic(2);
  pool[0].source = DatasetSource::Snli;
  save_generic_jsonl(dir.path() / "s.jsonl", pool);
  const auto back = load_dataset(dir.path() / "s.jsonl", DatasetFormat::GenericJsonl);
  CHECK(back.instances == pool);
}
