#include "zsst/eval.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zsst/errors.hpp"
#include "zsst/parallel.hpp"

namespace zsst {

EvalResult evaluate_accuracy(const Backend& backend, const ModelHandle& handle,
                             const Corpus& evalset, const ClassSet& classes,
                             const HypothesisTemplate& tmpl,
                             std::string model_tag, std::uint64_t seed) {
  if (!evalset.labeled()) {
    throw ValidationError("evaluate_accuracy needs a labeled corpus, got " +
                          to_string(evalset.role));
  }
  if (evalset.size() == 0) {
    throw ValidationError("evaluate_accuracy on an empty corpus");
  }
  std::vector<std::size_t> gold(evalset.size());
  for (std::size_t i = 0; i < evalset.size(); ++i) {
    const std::string& label = evalset.labels[i];
    const std::optional<std::size_t> idx = classes.index_of(label);
    if (!idx) {
      throw ValidationError("gold label '" + label +
                            "' is not in the class set of " +
                            classes.dataset_id());
    }
    gold[i] = *idx;
  }

  std::atomic<std::size_t> correct{0};
  ParallelErrorCapture errors;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(evalset.size());
       ++i) {
    errors.run([&] {
      const std::size_t r = static_cast<std::size_t>(i);
      const Classification c = classify(backend, handle,
                                        evalset.examples[r].text, classes,
                                        tmpl);
      if (c.predicted_index == gold[r]) {
        correct.fetch_add(1, std::memory_order_relaxed);
      }
    });
  }
  errors.rethrow();

  EvalResult result;
  result.dataset_id = evalset.dataset_id;
  result.model_tag = std::move(model_tag);
  result.n_examples = evalset.size();
  result.accuracy = static_cast<double>(correct.load()) /
                    static_cast<double>(evalset.size());
  result.seed = seed;
  return result;
}

AggregateResult aggregate_values(std::span<const double> values) {
  if (values.empty()) {
    throw ValidationError("aggregate over an empty result list");
  }
  AggregateResult out;
  out.values.assign(values.begin(), values.end());
  out.repetitions = values.size();
  out.mean = mean(values);
  out.single_run = values.size() == 1;
  out.sem = out.single_run ? 0.0 : standard_error(values);
  return out;
}

AggregateResult aggregate_seeds(std::span<const EvalResult> results) {
  if (results.empty()) {
    throw ValidationError("aggregate over an empty result list");
  }
  for (const EvalResult& r : results) {
    if (r.dataset_id != results.front().dataset_id ||
        r.model_tag != results.front().model_tag) {
      throw ValidationError(
          "aggregate_seeds inputs mix datasets or model tags: (" +
          r.dataset_id + ", " + r.model_tag + ") vs (" +
          results.front().dataset_id + ", " + results.front().model_tag +
          ")");
    }
  }
  std::vector<double> values;
  values.reserve(results.size());
  for (const EvalResult& r : results) values.push_back(r.accuracy);
  return aggregate_values(values);
}

CrossTaskMatrix cross_task_matrix(
    const Backend& backend, const ModelHandle& base,
    std::span<const std::string> sources,
    const std::map<std::string, ModelHandle>& runs,
    const std::map<std::string, Corpus>& evalsets,
    const DatasetRegistry& registry, const HypothesisTemplate& tmpl) {
  CrossTaskMatrix matrix;
  matrix.sources.assign(sources.begin(), sources.end());
  for (const auto& [target, _] : evalsets) matrix.targets.push_back(target);

  // Base accuracies are shared across sources; compute each target once.
  std::map<std::string, double> base_acc;
  for (const auto& [target, corpus] : evalsets) {
    const ClassSet& classes = registry.get(target);
    base_acc[target] =
        evaluate_accuracy(backend, base, corpus, classes, tmpl).accuracy;
  }

  for (const std::string& source : matrix.sources) {
    const auto run = runs.find(source);
    for (const std::string& target : matrix.targets) {
      CrossTaskCell cell;
      cell.source = source;
      cell.target = target;
      if (run != runs.end()) {
        const ClassSet& classes = registry.get(target);
        const double trained =
            evaluate_accuracy(backend, run->second, evalsets.at(target),
                              classes, tmpl)
                .accuracy;
        cell.delta = trained - base_acc.at(target);
        cell.present = true;
      }
      matrix.cells.push_back(std::move(cell));
    }
  }
  return matrix;
}

namespace {

nlohmann::ordered_json aggregate_to_json(const AggregateResult& aggregate) {
  nlohmann::ordered_json j;
  j["mean"] = aggregate.mean;
  j["sem"] = aggregate.sem;
  j["seeds"] = aggregate.values;
  j["repetitions"] = aggregate.repetitions;
  j["single_run"] = aggregate.single_run;
  return j;
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write report: " + path.string());
  }
  out << doc.dump(2) << "\n";
  out.flush();
  if (!out) {
    throw StorageError("failed writing report: " + path.string());
  }
}

}  // namespace

void write_report_json(const std::filesystem::path& path,
                       const std::string& model_tag,
                       const std::string& dataset,
                       const AggregateResult& aggregate,
                       std::optional<double> p_value) {
  nlohmann::ordered_json doc;
  doc["model_tag"] = model_tag;
  doc["dataset"] = dataset;
  doc["mean"] = aggregate.mean;
  doc["sem"] = aggregate.sem;
  doc["seeds"] = aggregate.values;
  doc["repetitions"] = aggregate.repetitions;
  if (p_value) {
    doc["p_value"] = *p_value;
    doc["p_value_test"] = "paired two-sided t-test";
  }
  write_json_file(path, doc);
}

void write_cross_task_csv(const std::filesystem::path& path,
                          const CrossTaskMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write cross-task matrix: " + path.string());
  }
  out << "source";
  for (const std::string& target : matrix.targets) out << "," << target;
  out << "\n";
  for (std::size_t i = 0; i < matrix.sources.size(); ++i) {
    out << matrix.sources[i];
    for (std::size_t j = 0; j < matrix.targets.size(); ++j) {
      const CrossTaskCell& cell = matrix.at(i, j);
      out << ",";
      if (cell.present) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", cell.delta);
        out << buf;
      }
    }
    out << "\n";
  }
  out.flush();
  if (!out) {
    throw StorageError("failed writing cross-task matrix: " + path.string());
  }
}

void write_ablation_report(const std::filesystem::path& path,
                           const std::string& dataset,
                           const AggregateResult& masked,
                           const AggregateResult& unmasked) {
  nlohmann::ordered_json doc;
  doc["dataset"] = dataset;
  doc["masked"] = aggregate_to_json(masked);
  doc["unmasked"] = aggregate_to_json(unmasked);
  doc["masked_minus_unmasked"] = masked.mean - unmasked.mean;
  write_json_file(path, doc);
}

}  // namespace zsst
