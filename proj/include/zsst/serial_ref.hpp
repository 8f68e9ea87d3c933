#pragma once

#include <span>

#include "zsst/eval.hpp"
#include "zsst/masking.hpp"
#include "zsst/selection.hpp"

namespace zsst::serial_ref {

// Straight-line twins of the parallel kernels. They share no code with the
// OpenMP paths on purpose: tests compare the two routes element for element,
// and the benchmark target measures the gap.

ScoreMatrix build_score_matrix(const Backend& backend,
                               const ModelHandle& handle,
                               std::span<const Example> examples,
                               const ClassSet& classes,
                               const HypothesisTemplate& tmpl);

std::vector<MaskResult> mask_batch(const Masker& masker,
                                   std::span<const std::string> texts,
                                   std::span<const std::string> class_names);

HeuristicScores heuristic_score_matrix(std::span<const Example> examples,
                                       const ClassSet& classes,
                                       const EmbeddingStore& store);

EvalResult evaluate_accuracy(const Backend& backend, const ModelHandle& handle,
                             const Corpus& evalset, const ClassSet& classes,
                             const HypothesisTemplate& tmpl,
                             std::string model_tag = "base",
                             std::uint64_t seed = 0);

}  // namespace zsst::serial_ref
