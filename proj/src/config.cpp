#include "zsst/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "zsst/errors.hpp"

namespace zsst {
namespace {

void reject_unknown_keys(const nlohmann::json& j,
                         const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (known.count(it.key()) == 0) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

void AppConfig::validate() const {
  if (backend != "mock" && backend != "transformer") {
    throw ConfigError("backend must be 'mock' or 'transformer', got '" +
                      backend + "'");
  }
  if (dataset.format != "jsonl" && dataset.format != "csv") {
    throw ConfigError("dataset format must be 'jsonl' or 'csv', got '" +
                      dataset.format + "'");
  }
  if (model_tag.empty()) throw ConfigError("model_tag must not be empty");
  if (unk_token.empty()) throw ConfigError("unk_token must not be empty");
  if (backend == "transformer" && adapter.command.empty()) {
    throw ConfigError("transformer backend needs adapter.command");
  }
  self_train.validate();
}

std::vector<std::uint64_t> AppConfig::effective_seeds() const {
  if (!seeds.empty()) return seeds;
  return {self_train.seed};
}

AppConfig app_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  reject_unknown_keys(
      j,
      {"backend", "model_tag", "template", "run_dir", "classes_file",
       "embeddings_file", "unk_token", "dataset", "self_train", "seeds",
       "mock", "adapter"},
      "config");

  AppConfig c;
  if (j.contains("backend")) c.backend = j.at("backend").get<std::string>();
  if (j.contains("model_tag")) {
    c.model_tag = j.at("model_tag").get<std::string>();
  }
  if (j.contains("template")) {
    c.template_pattern = j.at("template").get<std::string>();
  }
  if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();
  if (j.contains("classes_file")) {
    c.classes_file = j.at("classes_file").get<std::string>();
  }
  if (j.contains("embeddings_file")) {
    c.embeddings_file = j.at("embeddings_file").get<std::string>();
  }
  if (j.contains("unk_token")) {
    c.unk_token = j.at("unk_token").get<std::string>();
  }

  if (j.contains("dataset")) {
    const nlohmann::json& d = j.at("dataset");
    reject_unknown_keys(
        d, {"id", "unlabeled_file", "test_file", "format", "max_unlabeled"},
        "dataset config");
    if (d.contains("id")) c.dataset.id = d.at("id").get<std::string>();
    if (d.contains("unlabeled_file")) {
      c.dataset.unlabeled_file = d.at("unlabeled_file").get<std::string>();
    }
    if (d.contains("test_file")) {
      c.dataset.test_file = d.at("test_file").get<std::string>();
    }
    if (d.contains("format")) {
      c.dataset.format = d.at("format").get<std::string>();
    }
    if (d.contains("max_unlabeled")) {
      c.dataset.max_unlabeled = d.at("max_unlabeled").get<std::size_t>();
    }
  }

  if (j.contains("self_train")) {
    c.self_train = self_train_config_from_json(j.at("self_train"));
  }
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }

  if (j.contains("mock")) {
    const nlohmann::json& m = j.at("mock");
    reject_unknown_keys(m, {"scale", "train_scale", "initial_bias"},
                        "mock config");
    if (m.contains("scale")) c.mock.scale = m.at("scale").get<double>();
    if (m.contains("train_scale")) {
      c.mock.train_scale = m.at("train_scale").get<bool>();
    }
    if (m.contains("initial_bias")) {
      for (const auto& [key, value] : m.at("initial_bias").items()) {
        c.mock.initial_bias[key] = value.get<double>();
      }
    }
  }

  if (j.contains("adapter")) {
    const nlohmann::json& a = j.at("adapter");
    reject_unknown_keys(a, {"command"}, "adapter config");
    if (a.contains("command")) {
      c.adapter.command = a.at("command").get<std::vector<std::string>>();
    }
  }
  return c;
}

nlohmann::ordered_json to_json(const AppConfig& config) {
  nlohmann::ordered_json j;
  j["backend"] = config.backend;
  j["model_tag"] = config.model_tag;
  j["template"] = config.template_pattern;
  j["run_dir"] = config.run_dir;
  j["classes_file"] = config.classes_file;
  j["embeddings_file"] = config.embeddings_file;
  j["unk_token"] = config.unk_token;
  j["dataset"] = {{"id", config.dataset.id},
                  {"unlabeled_file", config.dataset.unlabeled_file},
                  {"test_file", config.dataset.test_file},
                  {"format", config.dataset.format},
                  {"max_unlabeled", config.dataset.max_unlabeled}};
  j["self_train"] = to_json(config.self_train);
  j["seeds"] = config.effective_seeds();
  nlohmann::ordered_json bias = nlohmann::ordered_json::object();
  {
    std::vector<std::string> keys;
    for (const auto& [k, _] : config.mock.initial_bias) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const std::string& k : keys) bias[k] = config.mock.initial_bias.at(k);
  }
  j["mock"] = {{"scale", config.mock.scale},
               {"train_scale", config.mock.train_scale},
               {"initial_bias", std::move(bias)}};
  j["adapter"] = {{"command", config.adapter.command}};
  return j;
}

void apply_embeddings_env_default(AppConfig& config) {
  if (!config.embeddings_file.empty()) return;
  if (const char* env = std::getenv(kEmbeddingsEnvVar)) {
    config.embeddings_file = env;
  }
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() +
                      " is not valid JSON: " + e.what());
  }
  AppConfig config = app_config_from_json(doc);
  apply_embeddings_env_default(config);
  return config;
}

}  // namespace zsst
