#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsst/core.hpp"

namespace zsst {

struct DatasetConfig {
  std::string id;
  std::string unlabeled_file;
  std::string test_file;
  std::string format = "jsonl";  // "jsonl" | "csv"
  std::size_t max_unlabeled = 0;  // 0 = use the whole pool
};

struct MockKnobs {
  double scale = 4.0;
  bool train_scale = true;
  std::unordered_map<std::string, double> initial_bias;
};

struct AdapterKnobs {
  std::vector<std::string> command;
};

// Full CLI configuration. Flags mirror these keys one-to-one and apply on
// top of the file values; every JSON level rejects unknown keys.
struct AppConfig {
  std::string backend = "mock";  // "mock" | "transformer"
  std::string model_tag = "mock";
  std::string template_pattern = std::string(kDefaultTemplatePattern);
  std::string run_dir;
  std::string classes_file;
  std::string embeddings_file;  // default comes from ZSST_EMBEDDINGS_PATH
  std::string unk_token = "<unk>";
  DatasetConfig dataset;
  SelfTrainConfig self_train;
  std::vector<std::uint64_t> seeds;  // empty = {self_train.seed}
  MockKnobs mock;
  AdapterKnobs adapter;

  void validate() const;
  std::vector<std::uint64_t> effective_seeds() const;
};

inline constexpr const char* kEmbeddingsEnvVar = "ZSST_EMBEDDINGS_PATH";

AppConfig app_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AppConfig& config);

// Parses the file and applies the embedding-path environment default.
AppConfig load_app_config(const std::filesystem::path& path);

// Environment fallback used by both the file loader and the flag layer.
void apply_embeddings_env_default(AppConfig& config);

}  // namespace zsst
