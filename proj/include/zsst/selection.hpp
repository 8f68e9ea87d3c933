#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zsst/backend.hpp"
#include "zsst/core.hpp"
#include "zsst/datasets.hpp"
#include "zsst/embeddings.hpp"
#include "zsst/masking.hpp"
#include "zsst/rng.hpp"

namespace zsst {

// Plain row-major matrix, one row per example, one column per class.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), data(r * c, 0.0) {}

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> mutable_row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
};

// Normalized per-example class distributions. Every stored row is validated:
// finite values in [0, 1] that sum to 1 within 1e-6.
class ScoreMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  ScoreMatrix(std::size_t rows, std::size_t cols);

  void set_row(std::size_t r, std::span<const double> values);
  double at(std::size_t r, std::size_t c) const { return m_.at(r, c); }
  std::span<const double> row(std::size_t r) const { return m_.row(r); }
  std::size_t rows() const { return m_.rows; }
  std::size_t cols() const { return m_.cols; }
  const RowMatrix& raw() const { return m_; }

 private:
  RowMatrix m_;
};

// Top two classes of one score row. `top` is the first strict maximum in
// class registry order, `second` the runner-up, delta = score_top - score_second.
struct RowRanking {
  std::size_t top = 0;
  std::size_t second = 0;
  double delta = 0.0;
};

RowRanking rank_row(std::span<const double> scores);

struct SelectedExample {
  std::size_t example_index = 0;
  std::size_t class_index = 0;
  double delta = 0.0;
};

// For every class: the examples predicted as that class, ranked by delta
// descending (ties to the lower example index), truncated to n_per_class.
// Output order is class index ascending, then rank. Rows where row_valid is
// zero are ignored entirely.
std::vector<SelectedExample> select_top_per_class(
    const RowMatrix& scores, std::size_t n_per_class,
    const std::vector<char>* row_valid = nullptr);

std::vector<SelectedExample> select_positives(const ScoreMatrix& scores,
                                              std::size_t n_per_class);

// Contradiction class indices for one positive. `closest` is the strongest
// non-positive class, `furthest` the weakest, `random` a uniform draw over
// the non-positive classes, `all` every one of them ascending.
std::vector<std::size_t> negative_classes(std::span<const double> row,
                                          std::size_t positive,
                                          ContrastStrategy strategy, Rng& rng);

// Scores every example against every class with the softmax-normalized
// classify() pipeline. Parallel over examples.
ScoreMatrix build_score_matrix(const Backend& backend,
                               const ModelHandle& handle,
                               std::span<const Example> examples,
                               const ClassSet& classes,
                               const HypothesisTemplate& tmpl);

struct PseudoLabel {
  std::string example_id;
  std::string class_name;
  double delta = 0.0;
  ContrastStrategy strategy = ContrastStrategy::kRandom;
  int iteration = 0;
};

struct PairRecord {
  std::string example_id;
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::kEntailment;
  ContrastStrategy strategy = ContrastStrategy::kRandom;
  int iteration = 0;
};

struct TrainingBatch {
  std::vector<PseudoLabel> labels;
  std::vector<PairRecord> records;
  std::vector<MaskResult> masks;  // aligned with labels; empty when unmasked
  std::size_t masked_count = 0;
};

// Expands selected positives into entail/contradict training pairs. The
// entailment pair and all its contradiction pairs share one premise: the
// masked text when `masker` is given, the original text otherwise. The rng
// is consumed only by the random strategy, one draw per positive. Accepts
// any score rows (normalized model scores or raw heuristic cosines);
// negatives are ranked within each row as-is.
TrainingBatch build_training_pairs(std::span<const Example> examples,
                                   const RowMatrix& scores,
                                   std::span<const SelectedExample> positives,
                                   const ClassSet& classes,
                                   const HypothesisTemplate& tmpl,
                                   ContrastStrategy strategy,
                                   const Masker* masker, int iteration,
                                   Rng& rng);

std::vector<NliTrainingPair> to_training_pairs(
    std::span<const PairRecord> records);

// Embedding-only scores: entry (i, c) is the maximum cosine between any
// candidate token of example i and the class-name vector of c. Examples with
// no candidate token get row_valid == 0 and never enter selection.
struct HeuristicScores {
  RowMatrix scores;
  std::vector<char> row_valid;
  std::size_t skipped_count = 0;
};

HeuristicScores heuristic_score_matrix(std::span<const Example> examples,
                                       const ClassSet& classes,
                                       const EmbeddingStore& store);

std::vector<SelectedExample> heuristic_select(const HeuristicScores& scores,
                                              std::size_t n_per_class);

// iter_<k>/ artifact io. JSONL writers emit one compact object per line;
// the score matrix is a small binary blob ("ZSSTSCR1", u64 rows, u64 cols,
// row-major doubles, host byte order).
void write_pseudo_labels_jsonl(const std::filesystem::path& path,
                               std::span<const PseudoLabel> labels);
void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const PairRecord> records);
void write_score_matrix(const std::filesystem::path& path,
                        const ScoreMatrix& scores);
ScoreMatrix read_score_matrix(const std::filesystem::path& path);

}  // namespace zsst
