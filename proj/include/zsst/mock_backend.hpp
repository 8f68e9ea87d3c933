#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "zsst/backend.hpp"
#include "zsst/embeddings.hpp"

namespace zsst {

// Deterministic desk-scale stand-in for an NLI cross-encoder. The entailment
// confidence for (premise, hypothesis-of-class-c) is
//   sigmoid(w_c + a * cosine(mean premise token vector, class-name vector))
// with a per-class trainable bias w_c and a shared trainable scale a.
struct MockConfig {
  std::string template_pattern = std::string(kDefaultTemplatePattern);
  std::shared_ptr<const EmbeddingStore> embeddings;
  double scale = 4.0;
  std::unordered_map<std::string, double> initial_bias;
  bool train_scale = true;
  std::string unk_token = "<unk>";

  void validate() const;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockConfig config);

  std::vector<double> score_entailment(
      const ModelHandle& handle, std::string_view premise,
      std::span<const std::string> hypotheses) const override;

  // Gradient descent on the sigmoid cross-entropy loss over (bias, scale).
  // Pass an empty checkpoint_dir to keep the trained state in memory only.
  ModelHandle fine_tune(const ModelHandle& base,
                        std::span<const NliTrainingPair> pairs,
                        const FineTuneSpec& spec, std::uint64_t seed,
                        const std::filesystem::path& checkpoint_dir) override;

  const ModelHandle& base_handle() const override { return base_handle_; }
  const std::string& unk_token() const override {
    return config_.unk_token;
  }
  std::string_view kind() const override { return "mock"; }

  // Introspection for tests.
  double bias_of(const ModelHandle& handle, const std::string& class_name) const;
  double scale_of(const ModelHandle& handle) const;

 private:
  struct State {
    std::unordered_map<std::string, double> bias;
    double scale = 0.0;
  };

  std::shared_ptr<const State> resolve_state(const ModelHandle& handle) const;
  std::shared_ptr<const State> load_checkpoint(
      const std::filesystem::path& path) const;
  double score_one(const State& state, std::span<const float> premise_mean,
                   bool premise_empty, const std::string& class_key) const;
  std::vector<float> premise_mean(std::string_view premise,
                                  bool* empty) const;
  std::vector<float> class_vector(const std::string& class_key) const;
  static std::string state_digest(const State& state,
                                  const std::string& parent_id);

  MockConfig config_;
  HypothesisTemplate template_;
  ModelHandle base_handle_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const State>> cache_;
};

}  // namespace zsst
