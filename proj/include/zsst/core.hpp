#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace zsst {

// Ordered set of target class names for one dataset. Names are trimmed and
// lowercased on construction; uniqueness and |names| >= 2 are enforced.
// Immutable after construction.
class ClassSet {
 public:
  ClassSet(std::string dataset_id, std::vector<std::string> names);

  const std::string& dataset_id() const { return dataset_id_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;

 private:
  std::string dataset_id_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Hypothesis pattern with exactly one "[]" slot, e.g. "This example is [].".
class HypothesisTemplate {
 public:
  explicit HypothesisTemplate(std::string pattern);

  const std::string& pattern() const { return pattern_; }
  std::string prefix() const { return pattern_.substr(0, slot_pos_); }
  std::string suffix() const { return pattern_.substr(slot_pos_ + 2); }

  std::string render(std::string_view class_name) const;

  // Inverse of render: recovers the class phrase from a rendered hypothesis,
  // or nullopt if the hypothesis does not match the pattern.
  std::optional<std::string> extract_class(std::string_view hypothesis) const;

 private:
  std::string pattern_;
  std::size_t slot_pos_ = 0;
};

inline constexpr std::string_view kDefaultTemplatePattern = "This example is [].";

std::string render_hypothesis(const HypothesisTemplate& tmpl,
                              std::string_view class_name);

enum class Optimizer { kAdamW, kSgd };
enum class Loss { kCrossEntropy };

Optimizer parse_optimizer(std::string_view s);
Loss parse_loss(std::string_view s);
std::string to_string(Optimizer o);
std::string to_string(Loss l);

// Fine-tuning hyperparameters. Defaults are one epoch, lr 2e-5, batch 32,
// AdamW, cross entropy.
struct FineTuneSpec {
  int epochs = 1;
  double learning_rate = 2e-5;
  int batch_size = 32;
  Optimizer optimizer = Optimizer::kAdamW;
  Loss loss = Loss::kCrossEntropy;

  void validate() const;
};

enum class ContrastStrategy { kRandom, kClosest, kFurthest, kAll };

ContrastStrategy parse_strategy(std::string_view s);
std::string to_string(ContrastStrategy s);

struct SelfTrainConfig {
  double per_class_fraction = 0.01;
  int iterations = 2;
  ContrastStrategy contrast_strategy = ContrastStrategy::kRandom;
  bool masking_enabled = true;
  std::uint64_t seed = 0;
  FineTuneSpec fine_tune;

  void validate() const;
};

// n = ceil(per_class_fraction * corpus_size), clamped to >= 1. A small
// epsilon guards against binary-representation overshoot (0.01 * 10000
// must give 100, not 101).
std::size_t resolve_n(double per_class_fraction, std::size_t corpus_size);
std::size_t resolve_n(const SelfTrainConfig& config, std::size_t corpus_size);

// JSON document <-> SelfTrainConfig, field names 1:1. Unknown keys are
// rejected with a ConfigError.
SelfTrainConfig self_train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SelfTrainConfig& config);
nlohmann::ordered_json to_json(const FineTuneSpec& spec);

}  // namespace zsst
