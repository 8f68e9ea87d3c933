#include "zsst/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zsst/errors.hpp"
#include "zsst/parallel.hpp"
#include "zsst/text.hpp"

namespace zsst {

namespace {

constexpr char kScoreMagic[8] = {'Z', 'S', 'S', 'T', 'S', 'C', 'R', '1'};

void require_cols(std::size_t cols) {
  if (cols < 2) {
    throw InternalError("score rows need at least two classes, got " +
                        std::to_string(cols));
  }
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols) : m_(rows, cols) {
  require_cols(cols);
}

void ScoreMatrix::set_row(std::size_t r, std::span<const double> values) {
  if (r >= m_.rows) {
    throw InternalError("score row " + std::to_string(r) + " out of range");
  }
  if (values.size() != m_.cols) {
    throw ValidationError("score row has " + std::to_string(values.size()) +
                          " entries, expected " + std::to_string(m_.cols));
  }
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("score entry outside [0, 1]: " +
                            std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw ValidationError("score row sums to " + std::to_string(sum) +
                          ", expected 1 within " +
                          std::to_string(kRowSumTolerance));
  }
  std::copy(values.begin(), values.end(), m_.mutable_row(r).begin());
}

RowRanking rank_row(std::span<const double> scores) {
  require_cols(scores.size());
  RowRanking r;
  r.top = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[r.top]) r.top = i;
  }
  r.second = r.top == 0 ? 1 : 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == r.top) continue;
    if (scores[i] > scores[r.second]) r.second = i;
  }
  r.delta = scores[r.top] - scores[r.second];
  return r;
}

std::vector<SelectedExample> select_top_per_class(
    const RowMatrix& scores, std::size_t n_per_class,
    const std::vector<char>* row_valid) {
  require_cols(scores.cols);
  if (n_per_class < 1) {
    throw ValidationError("n_per_class must be at least 1");
  }
  if (row_valid && row_valid->size() != scores.rows) {
    throw InternalError("row_valid mask size mismatch");
  }

  std::vector<std::vector<SelectedExample>> buckets(scores.cols);
  for (std::size_t i = 0; i < scores.rows; ++i) {
    if (row_valid && !(*row_valid)[i]) continue;
    const RowRanking r = rank_row(scores.row(i));
    buckets[r.top].push_back({i, r.top, r.delta});
  }

  std::vector<SelectedExample> out;
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    std::vector<SelectedExample>& bucket = buckets[c];
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const SelectedExample& a, const SelectedExample& b) {
                       if (a.delta != b.delta) return a.delta > b.delta;
                       return a.example_index < b.example_index;
                     });
    const std::size_t take = std::min(n_per_class, bucket.size());
    out.insert(out.end(), bucket.begin(), bucket.begin() + take);
  }
  return out;
}

std::vector<SelectedExample> select_positives(const ScoreMatrix& scores,
                                              std::size_t n_per_class) {
  return select_top_per_class(scores.raw(), n_per_class);
}

std::vector<std::size_t> negative_classes(std::span<const double> row,
                                          std::size_t positive,
                                          ContrastStrategy strategy,
                                          Rng& rng) {
  require_cols(row.size());
  if (positive >= row.size()) {
    throw InternalError("positive class index out of range");
  }

  switch (strategy) {
    case ContrastStrategy::kClosest: {
      std::size_t best = positive == 0 ? 1 : 0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c == positive) continue;
        if (row[c] > row[best]) best = c;
      }
      return {best};
    }
    case ContrastStrategy::kFurthest: {
      std::size_t worst = positive == 0 ? 1 : 0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c == positive) continue;
        if (row[c] < row[worst]) worst = c;
      }
      return {worst};
    }
    case ContrastStrategy::kRandom: {
      const std::size_t k = rng.bounded(row.size() - 1);
      return {k < positive ? k : k + 1};
    }
    case ContrastStrategy::kAll: {
      std::vector<std::size_t> out;
      out.reserve(row.size() - 1);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c != positive) out.push_back(c);
      }
      return out;
    }
  }
  throw InternalError("unreachable ContrastStrategy");
}

ScoreMatrix build_score_matrix(const Backend& backend,
                               const ModelHandle& handle,
                               std::span<const Example> examples,
                               const ClassSet& classes,
                               const HypothesisTemplate& tmpl) {
  ScoreMatrix matrix(examples.size(), classes.size());
  ParallelErrorCapture errors;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(examples.size());
       ++i) {
    errors.run([&] {
      const std::size_t r = static_cast<std::size_t>(i);
      Classification c =
          classify(backend, handle, examples[r].text, classes, tmpl);
      matrix.set_row(r, c.probabilities);
    });
  }
  errors.rethrow();
  return matrix;
}

TrainingBatch build_training_pairs(std::span<const Example> examples,
                                   const RowMatrix& scores,
                                   std::span<const SelectedExample> positives,
                                   const ClassSet& classes,
                                   const HypothesisTemplate& tmpl,
                                   ContrastStrategy strategy,
                                   const Masker* masker, int iteration,
                                   Rng& rng) {
  if (scores.rows != examples.size()) {
    throw InternalError("score matrix rows do not match example count");
  }
  if (scores.cols != classes.size()) {
    throw InternalError("score matrix cols do not match class count");
  }

  for (const SelectedExample& s : positives) {
    if (s.example_index >= examples.size()) {
      throw InternalError("selected example index " +
                          std::to_string(s.example_index) +
                          " has no backing example");
    }
    if (s.class_index >= classes.size()) {
      throw InternalError("selected class index out of range");
    }
  }

  TrainingBatch batch;
  // Premises are masked up front in one parallel batch; the rng-consuming
  // assembly below stays serial so draws land in a fixed order.
  if (masker) {
    std::vector<std::string> texts;
    std::vector<std::string> names;
    texts.reserve(positives.size());
    names.reserve(positives.size());
    for (const SelectedExample& s : positives) {
      texts.push_back(examples[s.example_index].text);
      names.push_back(classes.names()[s.class_index]);
    }
    batch.masks = mask_batch(*masker, texts, names);
  }

  batch.labels.reserve(positives.size());
  for (std::size_t k = 0; k < positives.size(); ++k) {
    const SelectedExample& s = positives[k];
    const Example& example = examples[s.example_index];
    const std::string& class_name = classes.names()[s.class_index];

    std::string premise = example.text;
    if (masker) {
      if (batch.masks[k].masked) ++batch.masked_count;
      premise = batch.masks[k].masked_text;
    }

    batch.labels.push_back(
        {example.id, class_name, s.delta, strategy, iteration});
    batch.records.push_back({example.id, premise, tmpl.render(class_name),
                             NliLabel::kEntailment, strategy, iteration});

    for (std::size_t neg : negative_classes(scores.row(s.example_index),
                                            s.class_index, strategy, rng)) {
      batch.records.push_back({example.id, premise,
                               tmpl.render(classes.names()[neg]),
                               NliLabel::kContradiction, strategy, iteration});
    }
  }
  return batch;
}

std::vector<NliTrainingPair> to_training_pairs(
    std::span<const PairRecord> records) {
  std::vector<NliTrainingPair> out;
  out.reserve(records.size());
  for (const PairRecord& r : records) {
    out.push_back({r.premise, r.hypothesis, r.label});
  }
  return out;
}

HeuristicScores heuristic_score_matrix(std::span<const Example> examples,
                                       const ClassSet& classes,
                                       const EmbeddingStore& store) {
  std::vector<std::vector<float>> class_vectors;
  class_vectors.reserve(classes.size());
  for (const std::string& name : classes.names()) {
    class_vectors.push_back(class_name_vector(name, store));
  }

  HeuristicScores result;
  result.scores = RowMatrix(examples.size(), classes.size());
  result.row_valid.assign(examples.size(), 0);

  ParallelErrorCapture errors;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(examples.size());
       ++i) {
    errors.run([&] {
      const std::size_t r = static_cast<std::size_t>(i);
      std::vector<const std::vector<float>*> candidates;
      for (const std::string& token : tokenize_lower(examples[r].text)) {
        if (is_punct_only(token)) continue;
        if (store.is_stopword(token)) continue;
        if (const std::vector<float>* v = store.find(token)) {
          candidates.push_back(v);
        }
      }
      if (candidates.empty()) return;
      result.row_valid[r] = 1;
      std::span<double> row = result.scores.mutable_row(r);
      for (std::size_t c = 0; c < class_vectors.size(); ++c) {
        double best = -1.0;
        for (const std::vector<float>* v : candidates) {
          best = std::max(best, cosine(*v, class_vectors[c]));
        }
        row[c] = best;
      }
    });
  }
  errors.rethrow();

  for (char valid : result.row_valid) {
    if (!valid) ++result.skipped_count;
  }
  return result;
}

std::vector<SelectedExample> heuristic_select(const HeuristicScores& scores,
                                              std::size_t n_per_class) {
  return select_top_per_class(scores.scores, n_per_class, &scores.row_valid);
}

void write_pseudo_labels_jsonl(const std::filesystem::path& path,
                               std::span<const PseudoLabel> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write pseudo labels: " + path.string());
  }
  for (const PseudoLabel& label : labels) {
    nlohmann::ordered_json line;
    line["example_id"] = label.example_id;
    line["class"] = label.class_name;
    line["delta"] = label.delta;
    line["strategy"] = std::string(to_string(label.strategy));
    line["iteration"] = label.iteration;
    out << line.dump() << "\n";
  }
  out.flush();
  if (!out) {
    throw StorageError("failed writing pseudo labels: " + path.string());
  }
}

void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const PairRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write training pairs: " + path.string());
  }
  for (const PairRecord& record : records) {
    nlohmann::ordered_json line;
    line["example_id"] = record.example_id;
    line["premise"] = record.premise;
    line["hypothesis"] = record.hypothesis;
    line["label"] = std::string(to_string(record.label));
    line["strategy"] = std::string(to_string(record.strategy));
    line["iteration"] = record.iteration;
    out << line.dump() << "\n";
  }
  out.flush();
  if (!out) {
    throw StorageError("failed writing training pairs: " + path.string());
  }
}

void write_score_matrix(const std::filesystem::path& path,
                        const ScoreMatrix& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write score matrix: " + path.string());
  }
  out.write(kScoreMagic, sizeof(kScoreMagic));
  const std::uint64_t rows = scores.rows();
  const std::uint64_t cols = scores.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(scores.raw().data.data()),
            static_cast<std::streamsize>(scores.raw().data.size() *
                                         sizeof(double)));
  out.flush();
  if (!out) {
    throw StorageError("failed writing score matrix: " + path.string());
  }
}

ScoreMatrix read_score_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StorageError("cannot read score matrix: " + path.string());
  }
  char magic[sizeof(kScoreMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kScoreMagic, sizeof(magic)) != 0) {
    throw StorageError("bad score matrix magic in " + path.string());
  }
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) {
    throw StorageError("truncated score matrix header in " + path.string());
  }
  ScoreMatrix matrix(static_cast<std::size_t>(rows),
                     static_cast<std::size_t>(cols));
  std::vector<double> row(static_cast<std::size_t>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) {
      throw StorageError("truncated score matrix body in " + path.string());
    }
    matrix.set_row(static_cast<std::size_t>(r), row);
  }
  return matrix;
}

}  // namespace zsst
