#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsst/backend.hpp"
#include "zsst/datasets.hpp"
#include "zsst/stats.hpp"

namespace zsst {

struct EvalResult {
  std::string dataset_id;
  std::string model_tag;  // base / after-iteration-k / caller-defined
  double accuracy = 0.0;
  std::size_t n_examples = 0;
  std::uint64_t seed = 0;
};

// Fraction of test examples whose classify() top class equals the gold
// label. Gold labels outside the class set fail with a ValidationError
// naming the label. Parallel over examples.
EvalResult evaluate_accuracy(const Backend& backend, const ModelHandle& handle,
                             const Corpus& evalset, const ClassSet& classes,
                             const HypothesisTemplate& tmpl,
                             std::string model_tag = "base",
                             std::uint64_t seed = 0);

struct AggregateResult {
  double mean = 0.0;
  double sem = 0.0;
  std::vector<double> values;  // one accuracy per seed, input order
  std::size_t repetitions = 0;
  bool single_run = false;
};

// Mean and SEM over per-seed results. All inputs must share dataset_id and
// model_tag. SEM uses the n-1 sample stddev; one result gives SEM 0 and
// sets single_run.
AggregateResult aggregate_seeds(std::span<const EvalResult> results);
AggregateResult aggregate_values(std::span<const double> values);

struct CrossTaskCell {
  std::string source;
  std::string target;
  double delta = 0.0;
  bool present = false;
};

struct CrossTaskMatrix {
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  std::vector<CrossTaskCell> cells;  // row-major, sources x targets

  const CrossTaskCell& at(std::size_t i, std::size_t j) const {
    return cells.at(i * targets.size() + j);
  }
};

// delta(i, j) = acc(self-trained-on-T_i on T_j) - acc(base on T_j). Targets
// are evaluated with their own class names and the shared template. Sources
// without a run handle get absent cells, never zeros.
CrossTaskMatrix cross_task_matrix(
    const Backend& backend, const ModelHandle& base,
    std::span<const std::string> sources,
    const std::map<std::string, ModelHandle>& runs,
    const std::map<std::string, Corpus>& evalsets,
    const DatasetRegistry& registry, const HypothesisTemplate& tmpl);

// report.json: {model_tag, dataset, mean, sem, seeds[], p_value?} plus the
// repetition count and, when a p value is present, the test variant.
void write_report_json(const std::filesystem::path& path,
                       const std::string& model_tag,
                       const std::string& dataset,
                       const AggregateResult& aggregate,
                       std::optional<double> p_value = std::nullopt);

// Cross-task CSV: header "source,<target...>", one row per source, empty
// cells for absent entries.
void write_cross_task_csv(const std::filesystem::path& path,
                          const CrossTaskMatrix& matrix);

// Masked-vs-unmasked comparison for the ablation command.
void write_ablation_report(const std::filesystem::path& path,
                           const std::string& dataset,
                           const AggregateResult& masked,
                           const AggregateResult& unmasked);

}  // namespace zsst
