#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsst/backend.hpp"
#include "zsst/core.hpp"
#include "zsst/datasets.hpp"
#include "zsst/masking.hpp"

namespace zsst {

// One completed scoring/selection/fine-tuning pass. File fields are paths
// relative to the run directory.
struct IterationArtifact {
  int iteration = 0;  // 1-based
  std::string scores_digest;
  std::string scores_file;
  std::string pseudo_labels_file;
  std::string pairs_file;
  std::string mask_decisions_file;  // empty when masking is disabled
  ModelHandle input;
  ModelHandle output;
  double duration_seconds = 0.0;
  std::size_t selected_count = 0;
  std::size_t pair_count = 0;
  std::size_t masked_count = 0;
};

// Accuracy probe recorded into the manifest ("base", "after-iteration-k").
struct EvalSnapshot {
  std::string tag;
  double accuracy = 0.0;
  std::size_t n_examples = 0;
};

struct RunManifest {
  std::string run_id;
  std::string status;  // "running" | "complete"
  std::string backend_kind;
  std::string dataset_id;
  std::string template_pattern;
  std::vector<std::string> class_names;
  std::string config_digest;
  std::string corpus_digest;
  nlohmann::ordered_json effective_config;  // the SelfTrainConfig
  nlohmann::ordered_json cli_config;        // full CLI config, may be empty
  std::vector<IterationArtifact> iterations;
  std::vector<EvalSnapshot> evaluations;
};

nlohmann::ordered_json to_json(const ModelHandle& handle);
ModelHandle model_handle_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::filesystem::path& run_dir,
                   const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& run_dir);
bool manifest_exists(const std::filesystem::path& run_dir);

// Digest of the effective config JSON; resume refuses on mismatch.
std::string config_digest(const SelfTrainConfig& config);

// Exclusive ownership of a run directory via an O_CREAT|O_EXCL lock file
// holding pid and host. A lock whose pid is dead on this host is broken
// automatically; otherwise acquisition fails with the holder info.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();

  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  void acquire();

  std::filesystem::path path_;
  bool held_ = false;
};

// Scores the unlabeled corpus with `input`, selects n = resolve_n(config)
// positives per class, expands them into contrast pairs (masked when a
// masker is given), persists scores/pseudo-labels/pairs under
// run_dir/iter_<k>/, then fine-tunes into iter_<k>/checkpoint/. Artifacts
// hit disk before fine-tuning starts.
IterationArtifact run_iteration(Backend& backend, const ModelHandle& input,
                                const Corpus& unlabeled,
                                const ClassSet& classes,
                                const HypothesisTemplate& tmpl,
                                const SelfTrainConfig& config, int iteration,
                                const std::filesystem::path& run_dir,
                                const Masker* masker);

// Called with the base handle (iteration 0) and after each iteration k.
// A returned snapshot is recorded in the manifest.
using EvalCallback =
    std::function<std::optional<EvalSnapshot>(const ModelHandle&, int)>;

struct SelfTrainOutcome {
  ModelHandle final_handle;
  RunManifest manifest;
  bool resumed = false;
  int iterations_run = 0;
};

// Runs config.iterations iterations, chaining handles M -> M' -> M''. A run
// directory with a manifest resumes after its last completed iteration,
// refusing when the stored config or corpus digest differs. `cli_config`,
// when given, is stored in the manifest and folded into the resume digest.
SelfTrainOutcome run_self_training(
    Backend& backend, const Corpus& unlabeled, const ClassSet& classes,
    const HypothesisTemplate& tmpl, const SelfTrainConfig& config,
    const std::filesystem::path& run_dir, const Masker* masker = nullptr,
    const EvalCallback& eval = {},
    const nlohmann::ordered_json* cli_config = nullptr);

}  // namespace zsst
