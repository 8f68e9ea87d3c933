#include <cstdlib>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "../support/test_util.hpp"
#include "zsst/config.hpp"
#include "zsst/errors.hpp"

using namespace zsst;
using namespace testutil;

namespace {

nlohmann::json full_config_json() {
  return nlohmann::json::parse(R"({
    "backend": "transformer",
    "model_tag": "bart-large-mnli",
    "template": "This text is about [].",
    "run_dir": "runs/exp1",
    "classes_file": "classes.json",
    "embeddings_file": "vectors.txt",
    "unk_token": "[MASK]",
    "dataset": {
      "id": "agnews",
      "unlabeled_file": "u.jsonl",
      "test_file": "t.jsonl",
      "format": "jsonl",
      "max_unlabeled": 5000
    },
    "self_train": {
      "per_class_fraction": 0.02,
      "iterations": 3,
      "contrast_strategy": "closest",
      "masking_enabled": false,
      "seed": 9,
      "fine_tune": {
        "epochs": 4,
        "learning_rate": 0.001,
        "batch_size": 8,
        "optimizer": "sgd",
        "loss": "cross_entropy"
      }
    },
    "seeds": [1, 2, 3],
    "mock": {
      "scale": 2.5,
      "train_scale": false,
      "initial_bias": {"sports": 0.4, "politics": -0.4}
    },
    "adapter": {
      "command": ["python3", "scorer.py"]
    }
  })");
}

struct EnvGuard {
  explicit EnvGuard(const char* name) : name_(name) {
    if (const char* old = std::getenv(name)) saved_ = old;
    unsetenv(name);
  }
  ~EnvGuard() {
    if (saved_.empty()) {
      unsetenv(name_);
    } else {
      setenv(name_, saved_.c_str(), 1);
    }
  }
  const char* name_;
  std::string saved_;
};

}  // namespace

TEST_SUITE("config") {

TEST_CASE("a full json document maps onto every AppConfig field") {
  const AppConfig c = app_config_from_json(full_config_json());
  CHECK(c.backend == "transformer");
  CHECK(c.model_tag == "bart-large-mnli");
  CHECK(c.template_pattern == "This text is about [].");
  CHECK(c.run_dir == "runs/exp1");
  CHECK(c.classes_file == "classes.json");
  CHECK(c.embeddings_file == "vectors.txt");
  CHECK(c.unk_token == "[MASK]");
  CHECK(c.dataset.id == "agnews");
  CHECK(c.dataset.unlabeled_file == "u.jsonl");
  CHECK(c.dataset.test_file == "t.jsonl");
  CHECK(c.dataset.format == "jsonl");
  CHECK(c.dataset.max_unlabeled == 5000);
  CHECK(c.self_train.per_class_fraction == doctest::Approx(0.02));
  CHECK(c.self_train.iterations == 3);
  CHECK(c.self_train.contrast_strategy == ContrastStrategy::kClosest);
  CHECK_FALSE(c.self_train.masking_enabled);
  CHECK(c.self_train.seed == 9);
  CHECK(c.self_train.fine_tune.epochs == 4);
  CHECK(c.self_train.fine_tune.learning_rate == doctest::Approx(0.001));
  CHECK(c.self_train.fine_tune.batch_size == 8);
  CHECK(c.self_train.fine_tune.optimizer == Optimizer::kSgd);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.mock.scale == doctest::Approx(2.5));
  CHECK_FALSE(c.mock.train_scale);
  CHECK(c.mock.initial_bias.at("sports") == doctest::Approx(0.4));
  CHECK(c.adapter.command ==
        std::vector<std::string>{"python3", "scorer.py"});
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("defaults survive a minimal document") {
  const AppConfig c = app_config_from_json(nlohmann::json::object());
  CHECK(c.backend == "mock");
  CHECK(c.model_tag == "mock");
  CHECK(c.template_pattern == "This example is [].");
  CHECK(c.unk_token == "<unk>");
  CHECK(c.dataset.format == "jsonl");
  CHECK(c.dataset.max_unlabeled == 0);
  CHECK(c.self_train.per_class_fraction == doctest::Approx(0.01));
  CHECK(c.self_train.iterations == 2);
  CHECK(c.self_train.masking_enabled);
  CHECK(c.seeds.empty());
  CHECK(c.mock.scale == doctest::Approx(4.0));
  CHECK(c.mock.train_scale);
  CHECK(c.adapter.command.empty());
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(
      app_config_from_json(nlohmann::json::parse(R"({"backends": "mock"})")),
      doctest::Contains("backends"), ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(
                      R"({"dataset": {"ids": "x"}})")),
                  ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(
                      R"({"self_train": {"iteration": 2}})")),
                  ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(
                      R"({"self_train": {"fine_tune": {"epoch": 1}}})")),
                  ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(
                      R"({"mock": {"bias": {}}})")),
                  ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(
                      R"({"adapter": {"args": []}})")),
                  ConfigError);
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse("[1, 2]")),
                  ConfigError);
}

TEST_CASE("round trip through to_json preserves the document") {
  const AppConfig c = app_config_from_json(full_config_json());
  const AppConfig back = app_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("validate catches bad enums and missing adapter commands") {
  AppConfig c;
  CHECK_NOTHROW(c.validate());

  AppConfig bad_backend = c;
  bad_backend.backend = "gpu";
  CHECK_THROWS_AS(bad_backend.validate(), ConfigError);

  AppConfig bad_format = c;
  bad_format.dataset.format = "tsv";
  CHECK_THROWS_AS(bad_format.validate(), ConfigError);

  AppConfig no_tag = c;
  no_tag.model_tag.clear();
  CHECK_THROWS_AS(no_tag.validate(), ConfigError);

  AppConfig no_unk = c;
  no_unk.unk_token.clear();
  CHECK_THROWS_AS(no_unk.validate(), ConfigError);

  AppConfig transformer = c;
  transformer.backend = "transformer";
  CHECK_THROWS_AS(transformer.validate(), ConfigError);
  transformer.adapter.command = {"scorer"};
  CHECK_NOTHROW(transformer.validate());

  AppConfig bad_self_train = c;
  bad_self_train.self_train.iterations = 0;
  CHECK_THROWS_AS(bad_self_train.validate(), ConfigError);
}

TEST_CASE("effective_seeds falls back to the self_train seed") {
  AppConfig c;
  c.self_train.seed = 7;
  CHECK(c.effective_seeds() == std::vector<std::uint64_t>{7});
  c.seeds = {4, 5};
  CHECK(c.effective_seeds() == std::vector<std::uint64_t>{4, 5});
}

TEST_CASE("embeddings env var fills only an empty embeddings_file") {
  EnvGuard guard(kEmbeddingsEnvVar);
  setenv(kEmbeddingsEnvVar, "/tmp/env-vectors.txt", 1);

  AppConfig empty;
  apply_embeddings_env_default(empty);
  CHECK(empty.embeddings_file == "/tmp/env-vectors.txt");

  AppConfig set;
  set.embeddings_file = "explicit.txt";
  apply_embeddings_env_default(set);
  CHECK(set.embeddings_file == "explicit.txt");

  unsetenv(kEmbeddingsEnvVar);
  AppConfig untouched;
  apply_embeddings_env_default(untouched);
  CHECK(untouched.embeddings_file.empty());
}

TEST_CASE("load_app_config reads files and reports bad ones") {
  TempDir tmp;
  EnvGuard guard(kEmbeddingsEnvVar);

  write_file(tmp / "good.json", full_config_json().dump());
  const AppConfig c = load_app_config(tmp / "good.json");
  CHECK(c.backend == "transformer");
  CHECK(c.embeddings_file == "vectors.txt");

  // The env default applies through the file loader too.
  setenv(kEmbeddingsEnvVar, "/tmp/env-vectors.txt", 1);
  write_file(tmp / "bare.json", "{}");
  CHECK(load_app_config(tmp / "bare.json").embeddings_file ==
        "/tmp/env-vectors.txt");

  CHECK_THROWS_AS(load_app_config(tmp / "missing.json"), ConfigError);
  write_file(tmp / "broken.json", "{");
  CHECK_THROWS_WITH_AS(load_app_config(tmp / "broken.json"),
                       doctest::Contains("not valid JSON"), ConfigError);
}

}  // TEST_SUITE("config")
