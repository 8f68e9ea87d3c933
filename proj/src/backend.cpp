#include "zsst/backend.hpp"

#include <algorithm>
#include <cmath>

#include "zsst/errors.hpp"

namespace zsst {

std::string_view to_string(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kContradiction:
      return "contradiction";
  }
  throw InternalError("unreachable NliLabel");
}

NliLabel parse_nli_label(std::string_view text) {
  if (text == "entailment") return NliLabel::kEntailment;
  if (text == "contradiction") return NliLabel::kContradiction;
  throw ValidationError("unknown NLI label: '" + std::string(text) + "'");
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) {
    throw ValidationError("softmax over empty score vector");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

Classification classify(const Backend& backend, const ModelHandle& handle,
                        std::string_view text, const ClassSet& classes,
                        const HypothesisTemplate& tmpl) {
  std::vector<std::string> hypotheses;
  hypotheses.reserve(classes.size());
  for (const std::string& name : classes.names()) {
    hypotheses.push_back(tmpl.render(name));
  }
  std::vector<double> raw = backend.score_entailment(handle, text, hypotheses);
  if (raw.size() != classes.size()) {
    throw InternalError("backend returned " + std::to_string(raw.size()) +
                        " scores for " + std::to_string(classes.size()) +
                        " hypotheses");
  }
  for (double s : raw) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ValidationError("entailment confidence outside [0, 1]: " +
                            std::to_string(s));
    }
  }

  Classification result;
  result.raw_scores = raw;
  result.probabilities = softmax(raw);
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.probabilities.size(); ++i) {
    if (result.probabilities[i] > result.probabilities[best]) best = i;
  }
  result.predicted_index = best;
  result.predicted_class = classes.names()[best];
  return result;
}

}  // namespace zsst
