#include "zsst/serial_ref.hpp"

#include <algorithm>

#include "zsst/errors.hpp"
#include "zsst/text.hpp"

namespace zsst::serial_ref {

ScoreMatrix build_score_matrix(const Backend& backend,
                               const ModelHandle& handle,
                               std::span<const Example> examples,
                               const ClassSet& classes,
                               const HypothesisTemplate& tmpl) {
  ScoreMatrix matrix(examples.size(), classes.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Classification c =
        classify(backend, handle, examples[i].text, classes, tmpl);
    matrix.set_row(i, c.probabilities);
  }
  return matrix;
}

std::vector<MaskResult> mask_batch(const Masker& masker,
                                   std::span<const std::string> texts,
                                   std::span<const std::string> class_names) {
  if (texts.size() != class_names.size()) {
    throw ValidationError("mask_batch: texts and class_names differ in size");
  }
  std::vector<MaskResult> results;
  results.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    results.push_back(masker.mask_for_class(texts[i], class_names[i]));
  }
  return results;
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
  for (std::size_t r = 0; r < examples.size(); ++r) {
    std::vector<const std::vector<float>*> candidates;
    for (const std::string& token : tokenize_lower(examples[r].text)) {
      if (is_punct_only(token)) continue;
      if (store.is_stopword(token)) continue;
      if (const std::vector<float>* v = store.find(token)) {
        candidates.push_back(v);
      }
    }
    if (candidates.empty()) {
      ++result.skipped_count;
      continue;
    }
    result.row_valid[r] = 1;
    std::span<double> row = result.scores.mutable_row(r);
    for (std::size_t c = 0; c < class_vectors.size(); ++c) {
      double best = -1.0;
      for (const std::vector<float>* v : candidates) {
        best = std::max(best, cosine(*v, class_vectors[c]));
      }
      row[c] = best;
    }
  }
  return result;
}

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
  std::size_t correct = 0;
  for (std::size_t i = 0; i < evalset.size(); ++i) {
    const std::string& label = evalset.labels[i];
    const std::optional<std::size_t> gold = classes.index_of(label);
    if (!gold) {
      throw ValidationError("gold label '" + label +
                            "' is not in the class set of " +
                            classes.dataset_id());
    }
    const Classification c = classify(backend, handle,
                                      evalset.examples[i].text, classes, tmpl);
    if (c.predicted_index == *gold) ++correct;
  }

  EvalResult result;
  result.dataset_id = evalset.dataset_id;
  result.model_tag = std::move(model_tag);
  result.n_examples = evalset.size();
  result.accuracy =
      static_cast<double>(correct) / static_cast<double>(evalset.size());
  result.seed = seed;
  return result;
}

}  // namespace zsst::serial_ref
