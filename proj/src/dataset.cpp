#include "axeval/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "axeval/text.hpp"

namespace axeval {

using nlohmann::json;

DatasetFormat parse_dataset_format(std::string_view name) {
  const std::string lowered = text::to_lower(text::trim(name));
  if (lowered == "snli-jsonl" || lowered == "snli") return DatasetFormat::SnliJsonl;
  if (lowered == "anli-jsonl" || lowered == "anli") return DatasetFormat::AnliJsonl;
  if (lowered == "generic-jsonl" || lowered == "generic") {
    return DatasetFormat::GenericJsonl;
  }
  throw DatasetError("unknown dataset format '" + std::string(name) +
                     "' (expected snli-jsonl, anli-jsonl or generic-jsonl)");
}

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::SnliJsonl:
      return "snli-jsonl";
    case DatasetFormat::AnliJsonl:
      return "anli-jsonl";
    case DatasetFormat::GenericJsonl:
      return "generic-jsonl";
  }
  return "generic-jsonl";
}

std::string_view to_string(DatasetSource source) {
  switch (source) {
    case DatasetSource::Snli:
      return "snli";
    case DatasetSource::Anli:
      return "anli";
    case DatasetSource::Other:
      return "other";
  }
  return "other";
}

std::size_t ClassCounts::count(InferenceLabel label) const {
  switch (label) {
    case InferenceLabel::Entailment:
      return entailment;
    case InferenceLabel::Contradiction:
      return contradiction;
    case InferenceLabel::Neutral:
      return neutral;
  }
  return 0;
}

InsufficientClassError::InsufficientClassError(InferenceLabel label,
                                               std::size_t available,
                                               std::size_t requested)
    : DatasetError("insufficient " + std::string(to_string(label)) +
                   " instances: requested " + std::to_string(requested) +
                   ", available " + std::to_string(available) + " (short by " +
                   std::to_string(requested - available) + ")"),
      label_(label),
      available_(available),
      requested_(requested) {}

namespace {

struct FieldMap {
  const char* premise;
  const char* hypothesis;
  const char* label;
  const char* id;
  DatasetSource source;
};

FieldMap fields_for(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::SnliJsonl:
      return {"sentence1", "sentence2", "gold_label", "pairID", DatasetSource::Snli};
    case DatasetFormat::AnliJsonl:
      return {"premise", "hypothesis", "label", "uid", DatasetSource::Anli};
    case DatasetFormat::GenericJsonl:
      return {"premise", "hypothesis", "label", "id", DatasetSource::Other};
  }
  return {"premise", "hypothesis", "label", "id", DatasetSource::Other};
}

std::optional<DatasetSource> source_from_name(std::string_view name) {
  const std::string lowered = text::to_lower(text::trim(name));
  if (lowered == "snli") return DatasetSource::Snli;
  if (lowered == "anli") return DatasetSource::Anli;
  if (lowered == "other") return DatasetSource::Other;
  return std::nullopt;
}

// Integer labels follow the common 0=entailment, 1=neutral, 2=contradiction
// convention; everything else goes through the textual alias set.
std::optional<InferenceLabel> label_from_json(const json& value) {
  if (value.is_string()) return label_from_alias(value.get<std::string>());
  if (value.is_number_integer()) {
    switch (value.get<long long>()) {
      case 0:
        return InferenceLabel::Entailment;
      case 1:
        return InferenceLabel::Neutral;
      case 2:
        return InferenceLabel::Contradiction;
      default:
        return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::string> id_from_json(const json& object, const char* key) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) {
    std::string id(text::trim(it->get<std::string>()));
    if (id.empty()) return std::nullopt;
    return id;
  }
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return std::nullopt;
}

std::optional<std::string> text_field(const json& object, const char* key) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

// Unbiased draw from [0, bound) on top of the raw mt19937_64 stream, so the
// sample does not depend on the standard library's distribution algorithms.
std::uint64_t uniform_below(std::mt19937_64& engine, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t draw = engine();
  while (draw >= limit) draw = engine();
  return draw % bound;
}

}  // namespace

LoadedDataset read_dataset(std::istream& in, DatasetFormat format) {
  const FieldMap fields = fields_for(format);
  LoadedDataset result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto skip = [&](std::string reason) {
      result.skipped.push_back({line_no, std::move(reason)});
    };
    if (text::is_blank(line)) {
      skip("blank line");
      continue;
    }
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError("malformed JSON on line " + std::to_string(line_no) + ": " +
                             e.what(),
                         line_no);
    }
    if (!object.is_object()) {
      throw DatasetError(
          "line " + std::to_string(line_no) + " is not a JSON object", line_no);
    }

    const auto label_it = object.find(fields.label);
    if (label_it == object.end()) {
      skip("missing label");
      continue;
    }
    const auto label = label_from_json(*label_it);
    if (!label) {
      skip("label outside alias set: " + label_it->dump());
      continue;
    }
    auto premise = text_field(object, fields.premise);
    auto hypothesis = text_field(object, fields.hypothesis);
    if (!premise || text::is_blank(*premise)) {
      skip("empty premise");
      continue;
    }
    if (!hypothesis || text::is_blank(*hypothesis)) {
      skip("empty hypothesis");
      continue;
    }

    DatasetSource source = fields.source;
    if (format == DatasetFormat::GenericJsonl) {
      if (auto name = text_field(object, "source")) {
        source = source_from_name(*name).value_or(DatasetSource::Other);
      }
    }
    std::string id = id_from_json(object, fields.id)
                         .value_or(std::string(to_string(source)) + ":" +
                                   std::to_string(line_no));
    if (!seen_ids.insert(id).second) {
      skip("duplicate id " + id);
      continue;
    }
    result.instances.push_back({std::move(id), std::string(text::trim(*premise)),
                                std::string(text::trim(*hypothesis)), *label, source});
  }
  if (in.bad()) throw DatasetError("read error while loading dataset");
  result.line_count = line_no;
  if (result.instances.empty()) {
    throw DatasetError("dataset contains no valid instances (" +
                       std::to_string(result.skipped.size()) + " lines skipped)");
  }
  return result;
}

LoadedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());
  try {
    return read_dataset(in, format);
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what(), e.line());
  }
}

std::vector<NliInstance> sample_stratified(std::span<const NliInstance> instances,
                                           const ClassCounts& target,
                                           std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 3> by_class;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    by_class[label_index(instances[i].gold_label)].push_back(i);
  }
  for (InferenceLabel label : kAllLabels) {
    const std::size_t have = by_class[label_index(label)].size();
    if (have < target.count(label)) {
      throw InsufficientClassError(label, have, target.count(label));
    }
  }

  std::mt19937_64 engine(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(target.entailment + target.contradiction + target.neutral);
  for (InferenceLabel label : kAllLabels) {
    auto& pool = by_class[label_index(label)];
    const std::size_t want = target.count(label);
    // Partial Fisher-Yates: the first `want` slots end up a uniform sample.
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + uniform_below(engine, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<long>(want));
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<NliInstance> sample;
  sample.reserve(chosen.size());
  for (std::size_t index : chosen) sample.push_back(instances[index]);
  return sample;
}

ClassCounts class_distribution(std::span<const NliInstance> instances) {
  ClassCounts counts;
  for (const auto& instance : instances) {
    switch (instance.gold_label) {
      case InferenceLabel::Entailment:
        ++counts.entailment;
        break;
      case InferenceLabel::Contradiction:
        ++counts.contradiction;
        break;
      case InferenceLabel::Neutral:
        ++counts.neutral;
        break;
    }
  }
  counts.total = instances.size();
  return counts;
}

void write_generic_jsonl(std::ostream& out, std::span<const NliInstance> instances) {
  for (const auto& instance : instances) {
    json line = {{"id", instance.id},
                 {"premise", instance.premise},
                 {"hypothesis", instance.hypothesis},
                 {"label", to_key(instance.gold_label)},
                 {"source", to_string(instance.source)}};
    out << line.dump() << '\n';
  }
}

void save_generic_jsonl(const std::filesystem::path& path,
                        std::span<const NliInstance> instances) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  write_generic_jsonl(out, instances);
  if (!out) throw DatasetError("write failed for " + path.string());
}

}  // namespace axeval
