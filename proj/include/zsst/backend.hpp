#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsst/core.hpp"

namespace zsst {

// Identifies one model state. `id` is a content digest, `state_ref` is a
// backend-specific locator (checkpoint directory, subprocess state key).
// `lineage` lists ancestor ids, oldest first.
struct ModelHandle {
  std::string kind;
  std::string id;
  std::string state_ref;
  std::vector<std::string> lineage;
};

enum class NliLabel { kEntailment, kContradiction };

std::string_view to_string(NliLabel label);
NliLabel parse_nli_label(std::string_view text);

struct NliTrainingPair {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::kEntailment;
};

// classify() output: probabilities are the softmax of the raw per-class
// entailment confidences, in class registry order.
struct Classification {
  std::size_t predicted_index = 0;
  std::string predicted_class;
  std::vector<double> probabilities;
  std::vector<double> raw_scores;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Raw entailment confidence in [0, 1] for each hypothesis against the
  // premise, same order as `hypotheses`. Must be const and thread-safe.
  virtual std::vector<double> score_entailment(
      const ModelHandle& handle, std::string_view premise,
      std::span<const std::string> hypotheses) const = 0;

  // Trains a copy of `base` on the pairs and returns the new handle. The
  // checkpoint directory receives whatever the backend needs to reload the
  // state later. Deterministic for a fixed (base, pairs, spec, seed).
  virtual ModelHandle fine_tune(const ModelHandle& base,
                                std::span<const NliTrainingPair> pairs,
                                const FineTuneSpec& spec, std::uint64_t seed,
                                const std::filesystem::path& checkpoint_dir) = 0;

  virtual const ModelHandle& base_handle() const = 0;
  virtual const std::string& unk_token() const = 0;
  virtual std::string_view kind() const = 0;
};

// Numerically stable softmax. Throws ValidationError on empty input.
std::vector<double> softmax(std::span<const double> scores);

// Scores one hypothesis per class in registry order, normalizes with
// softmax, and picks the argmax. Ties resolve to the lowest class index.
Classification classify(const Backend& backend, const ModelHandle& handle,
                        std::string_view text, const ClassSet& classes,
                        const HypothesisTemplate& tmpl);

}  // namespace zsst
