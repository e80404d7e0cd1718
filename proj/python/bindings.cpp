#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "axeval/app.hpp"
#include "axeval/metrics.hpp"
#include "axeval/parse.hpp"
#include "axeval/prompts.hpp"
#include "axeval/report.hpp"

namespace py = pybind11;
using namespace axeval;

namespace {

// JSON documents cross the boundary as plain Python containers.
py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::handle& obj) {
  return nlohmann::json::parse(
      py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

InferenceLabel label_arg(std::string_view name) {
  auto label = label_from_alias(name);
  if (!label) throw py::value_error("unknown label '" + std::string(name) + "'");
  return *label;
}

py::dict instance_dict(const NliInstance& x) {
  py::dict d;
  d["id"] = x.id;
  d["premise"] = x.premise;
  d["hypothesis"] = x.hypothesis;
  d["label"] = std::string(to_string(x.gold_label));
  d["source"] = std::string(to_string(x.source));
  return d;
}

NliInstance instance_arg(const py::dict& d) {
  NliInstance x;
  x.id = d["id"].cast<std::string>();
  x.premise = d["premise"].cast<std::string>();
  x.hypothesis = d["hypothesis"].cast<std::string>();
  x.gold_label = label_arg(d["label"].cast<std::string>());
  return x;
}

std::vector<NliInstance> instances_arg(const py::list& items) {
  std::vector<NliInstance> out;
  for (const auto& item : items) out.push_back(instance_arg(item.cast<py::dict>()));
  return out;
}

py::dict counts_dict(const ClassCounts& c) {
  py::dict d;
  d["Entailment"] = c.entailment;
  d["Contradiction"] = c.contradiction;
  d["Neutral"] = c.neutral;
  d["total"] = c.total;
  return d;
}

template <typename T, typename F>
py::dict parsed_or_raise(const Parsed<T>& parsed, F&& fill) {
  if (!parsed) throw py::value_error(std::string(to_string(parsed.error())));
  py::dict d;
  fill(d, *parsed);
  return d;
}

py::dict prompt_dict(const RenderedPrompt& p) {
  py::dict d;
  d["kind"] = std::string(to_string(p.kind));
  d["text"] = p.text;
  d["slot_digest"] = p.slot_digest;
  return d;
}

}  // namespace

PYBIND11_MODULE(_axeval, m) {
  m.doc() = "Commonsense-axiom evaluation harness for NLI";

  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<PromptError>(m, "PromptError", PyExc_ValueError);
  py::register_exception<MetricsError>(m, "MetricsError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<LedgerError>(m, "LedgerError", PyExc_RuntimeError);

  // dataset
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, std::string_view format) {
        const auto loaded = load_dataset(path, parse_dataset_format(format));
        py::list instances;
        for (const auto& x : loaded.instances) instances.append(instance_dict(x));
        py::list skipped;
        for (const auto& s : loaded.skipped) skipped.append(py::make_tuple(s.line, s.reason));
        py::dict d;
        d["instances"] = instances;
        d["skipped"] = skipped;
        d["line_count"] = loaded.line_count;
        return d;
      },
      py::arg("path"), py::arg("format") = "snli-jsonl");
  m.def(
      "sample_stratified",
      [](const py::list& items, std::size_t e, std::size_t c, std::size_t n, std::uint64_t seed) {
        py::list out;
        for (const auto& x : sample_stratified(instances_arg(items), ClassCounts::of(e, c, n), seed)) {
          out.append(instance_dict(x));
        }
        return out;
      },
      py::arg("instances"), py::arg("entailment"), py::arg("contradiction"), py::arg("neutral"),
      py::arg("seed") = 0);
  m.def(
      "class_distribution",
      [](const py::list& items) { return counts_dict(class_distribution(instances_arg(items))); },
      py::arg("instances"));

  // prompts
  m.def(
      "render_prompt",
      [](std::string_view kind, const py::dict& instance, std::string_view axiom,
         std::string_view axiom_j, std::string_view gold,
         const std::optional<std::filesystem::path>& prompt_dir) {
        const auto lib = prompt_dir ? PromptLibrary::load(*prompt_dir) : PromptLibrary::builtin();
        const auto x = instance_arg(instance);
        if (kind == "P1") return prompt_dict(lib.render_p1(x));
        if (kind == "P2") return prompt_dict(lib.render_p2(x, axiom));
        if (kind == "P3") return prompt_dict(lib.render_p3(x));
        if (kind == "JudgeHelp") {
          return prompt_dict(lib.render_judge_helpfulness(
              x, axiom, gold.empty() ? x.gold_label : label_arg(gold)));
        }
        if (kind == "JudgeCons") return prompt_dict(lib.render_judge_consistency(x, axiom, axiom_j));
        throw py::value_error("unknown prompt kind '" + std::string(kind) + "'");
      },
      py::arg("kind"), py::arg("instance"), py::arg("axiom") = "", py::arg("axiom_j") = "",
      py::arg("gold") = "", py::arg("prompt_dir") = std::nullopt);

  // response parsing
  m.def("parse_axiom", [](std::string_view raw) {
    return parsed_or_raise(parse_axiom(raw), [](py::dict& d, const ParsedAxiom& a) {
      d["knowledge_type"] = a.knowledge_type;
      d["axiom"] = a.axiom;
      d["sentence_count"] = a.sentence_count;
    });
  });
  m.def(
      "parse_label",
      [](std::string_view raw, bool require_explanation) {
        const auto parsed =
            require_explanation ? parse_label_with_explanation(raw) : parse_label(raw);
        return parsed_or_raise(parsed, [](py::dict& d, const ParsedLabel& l) {
          d["label"] = std::string(to_string(l.label));
          d["explanation"] = l.explanation;
        });
      },
      py::arg("raw"), py::arg("require_explanation") = false);
  m.def("parse_rating", [](std::string_view raw) {
    return parsed_or_raise(parse_rating(raw), [](py::dict& d, const ParsedRating& r) {
      d["rating"] = r.rating;
      d["explanation"] = r.explanation;
    });
  });

  // metrics
  m.def("binarize_helpfulness", &binarize_helpfulness, py::arg("rating"), py::arg("threshold") = 6);
  m.def("binarize_consistency", &binarize_consistency, py::arg("rating"), py::arg("threshold") = 8);
  m.def(
      "consistency_score",
      [](const std::vector<int>& ratings, int threshold) {
        std::vector<ConsistencyAnnotation> cons;
        for (std::size_t k = 0; k < ratings.size(); ++k) {
          cons.push_back({"x", AxiomSource::P1, static_cast<int>(k) + 2, ratings[k]});
        }
        return consistency_score(cons, static_cast<int>(ratings.size()) + 1, threshold);
      },
      py::arg("ratings"), py::arg("threshold") = 8,
      "Mean binarized similarity of runs 2..R against run 1, given in order.");
  m.def("factuality_summary", [](const std::vector<int>& h) {
    const auto s = factuality_summary(h);
    py::dict d;
    d["n"] = s.n;
    d["CR"] = s.cr;
    d["WR"] = s.wr;
    d["NCR"] = s.ncr;
    return d;
  });
  m.def("net_consistently_correct_rate", &net_consistently_correct_rate, py::arg("c_correct"),
        py::arg("cr"), py::arg("c_wrong"), py::arg("wr"));
  m.def(
      "class_accuracy",
      [](const std::vector<std::string>& gold,
         const std::vector<std::vector<std::optional<std::string>>>& predictions,
         std::string_view estimator) {
        std::vector<InferenceLabel> g;
        for (const auto& x : gold) g.push_back(label_arg(x));
        std::vector<std::vector<std::optional<InferenceLabel>>> runs;
        for (const auto& run : predictions) {
          auto& out = runs.emplace_back();
          for (const auto& p : run) {
            out.push_back(p ? std::optional(label_arg(*p)) : std::nullopt);
          }
        }
        const auto table = class_accuracy(error_matrix(g, runs, parse_std_estimator(estimator)),
                                          parse_std_estimator(estimator));
        py::dict d;
        for (const auto& [label, stat] : table.per_class) {
          d[py::str(std::string(to_string(label)))] = py::make_tuple(stat.mean, stat.std);
        }
        d["Overall"] = py::make_tuple(table.overall.mean, table.overall.std);
        return d;
      },
      py::arg("gold"), py::arg("predictions"), py::arg("estimator") = "sample");

  // experiment and report
  m.def(
      "run_experiment",
      [](const py::list& items, const std::filesystem::path& out_dir, std::string run_id,
         int runs, std::string_view phase, std::string gen_model, std::string judge_model,
         std::string_view backend, const std::optional<std::filesystem::path>& stub_script,
         const std::optional<std::filesystem::path>& prompt_dir, std::size_t workers,
         bool use_cache) {
        ExperimentConfig config;
        config.out_dir = out_dir;
        config.run_id = std::move(run_id);
        config.instances = instances_arg(items);
        config.runs = runs;
        config.generation_model.model_name = std::move(gen_model);
        config.judge_model.model_name = std::move(judge_model);
        config.generation_backend = make_backend(backend, stub_script);
        config.judge_backend = config.generation_backend;
        config.prompt_dir = prompt_dir;
        config.options.workers = workers;
        config.options.use_cache = use_cache;
        const RunPhase which = parse_run_phase(phase);
        RunSummary summary;
        {
          py::gil_scoped_release release;
          summary = run_experiment(config, which);
        }
        py::dict status;
        for (const auto& [p, s] : summary.status.phases) {
          py::dict row;
          row["expected"] = s.expected;
          row["completed"] = s.completed;
          row["excluded"] = s.excluded;
          row["pending"] = s.pending();
          status[py::str(std::string(to_string(p)))] = row;
        }
        py::dict d;
        d["run_dir"] = summary.run_dir;
        d["status"] = status;
        d["backend_calls"] = summary.backend_calls;
        d["cache_hits"] = summary.cache_hits;
        return d;
      },
      py::arg("instances"), py::arg("out_dir"), py::arg("run_id") = "default",
      py::arg("runs") = 5, py::arg("phase") = "all", py::arg("gen_model") = "stub-generator",
      py::arg("judge_model") = "stub-judge", py::arg("backend") = "stub",
      py::arg("stub_script") = std::nullopt, py::arg("prompt_dir") = std::nullopt,
      py::arg("workers") = 4, py::arg("use_cache") = true);
  m.def(
      "build_report",
      [](const std::filesystem::path& run_dir, int help_threshold, int cons_threshold,
         std::string_view estimator, const std::optional<std::filesystem::path>& write_to,
         std::string_view formats) {
        ReportOptions options;
        options.thresholds = {help_threshold, cons_threshold};
        options.thresholds.validate();
        options.estimator = parse_std_estimator(estimator);
        const auto report = build_report(RunLedger::open(run_dir), options);
        if (write_to) write_report(report, *write_to, parse_report_formats(formats));
        return to_python(report_to_json(report));
      },
      py::arg("run_dir"), py::arg("help_threshold") = 6, py::arg("cons_threshold") = 8,
      py::arg("estimator") = "sample", py::arg("write_to") = std::nullopt,
      py::arg("formats") = "md,csv,json");
  m.def(
      "report_to_markdown",
      [](const py::object& doc) { return report_to_markdown(from_python(doc)); },
      py::arg("report"));
}
