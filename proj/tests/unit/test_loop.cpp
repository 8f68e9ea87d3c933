#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "../support/synthetic.hpp"
#include "../support/test_util.hpp"
#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"
#include "zsst/loop.hpp"
#include "zsst/mock_backend.hpp"
#include "zsst/selection.hpp"

using namespace zsst;
using namespace testutil;

namespace {

// Delegates everything to a wrapped backend but fails the nth fine_tune
// call, to simulate a crash mid-run.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(Backend& inner, int fail_on_call)
      : inner_(inner), fail_on_call_(fail_on_call) {}

  std::vector<double> score_entailment(
      const ModelHandle& handle, std::string_view premise,
      std::span<const std::string> hypotheses) const override {
    return inner_.score_entailment(handle, premise, hypotheses);
  }

  ModelHandle fine_tune(const ModelHandle& base,
                        std::span<const NliTrainingPair> pairs,
                        const FineTuneSpec& spec, std::uint64_t seed,
                        const std::filesystem::path& checkpoint_dir) override {
    if (++calls_ == fail_on_call_) {
      throw TransportError("injected fine-tune failure");
    }
    return inner_.fine_tune(base, pairs, spec, seed, checkpoint_dir);
  }

  const ModelHandle& base_handle() const override {
    return inner_.base_handle();
  }
  const std::string& unk_token() const override { return inner_.unk_token(); }
  std::string_view kind() const override { return inner_.kind(); }

 private:
  Backend& inner_;
  int fail_on_call_;
  int calls_ = 0;
};

SelfTrainConfig loop_config() {
  SelfTrainConfig config;
  config.per_class_fraction = 0.02;
  config.iterations = 2;
  config.contrast_strategy = ContrastStrategy::kRandom;
  config.masking_enabled = true;
  config.seed = 5;
  config.fine_tune.epochs = 2;
  config.fine_tune.learning_rate = 0.05;
  config.fine_tune.batch_size = 16;
  return config;
}

std::size_t count_lines(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::size_t n = 0;
  for (char c : content) {
    if (c == '\n') ++n;
  }
  return n;
}

EvalCallback recording_eval(std::vector<std::string>& tags) {
  return [&tags](const ModelHandle&, int k) {
    EvalSnapshot snap;
    snap.tag = k == 0 ? "base" : "after-iteration-" + std::to_string(k);
    snap.accuracy = 0.5;
    snap.n_examples = 40;
    tags.push_back(snap.tag);
    return std::optional<EvalSnapshot>(snap);
  };
}

std::string local_hostname() {
  char buf[256] = {0};
  REQUIRE(gethostname(buf, sizeof(buf) - 1) == 0);
  return buf;
}

// A pid that is guaranteed dead: fork a child that exits at once, reap it.
pid_t dead_pid() {
  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) _exit(0);
  int status = 0;
  REQUIRE(waitpid(pid, &status, 0) == pid);
  return pid;
}

}  // namespace

TEST_SUITE("loop") {

TEST_CASE("run_iteration persists scores, labels, pairs and a checkpoint") {
  const synth::World world = synth::make_world(7, 200, 0);
  MockBackend backend(world.mock_config());
  Masker masker(*world.store, backend.unk_token());
  masker.prepare(world.classes);
  const HypothesisTemplate tmpl("This example is [].");
  const SelfTrainConfig config = loop_config();
  TempDir tmp;

  const IterationArtifact artifact =
      run_iteration(backend, backend.base_handle(), world.unlabeled,
                    world.classes, tmpl, config, 1, tmp.path(), &masker);

  CHECK(artifact.iteration == 1);
  CHECK(artifact.input.id == backend.base_handle().id);
  CHECK(artifact.output.id != backend.base_handle().id);
  CHECK(artifact.scores_file == "iter_1/scores.bin");
  CHECK(artifact.pseudo_labels_file == "iter_1/pseudo_labels.jsonl");
  CHECK(artifact.pairs_file == "iter_1/pairs.jsonl");
  CHECK(artifact.mask_decisions_file == "iter_1/mask_decisions.jsonl");
  CHECK(artifact.duration_seconds >= 0.0);

  const std::filesystem::path iter_dir = tmp / "iter_1";
  CHECK(artifact.scores_digest == digest_file_hex(iter_dir / "scores.bin"));
  const ScoreMatrix scores = read_score_matrix(iter_dir / "scores.bin");
  CHECK(scores.rows() == 200);
  CHECK(scores.cols() == 4);

  // resolve_n(0.02, 200) = 4 per class; every synth text has an in-vocab
  // non-stopword token, so each selected premise gets masked.
  CHECK(artifact.selected_count > 0);
  CHECK(artifact.selected_count <= 16);
  CHECK(artifact.masked_count == artifact.selected_count);
  // Random strategy: one entailment and one contradiction per positive.
  CHECK(artifact.pair_count == 2 * artifact.selected_count);

  CHECK(count_lines(iter_dir / "pseudo_labels.jsonl") ==
        artifact.selected_count);
  CHECK(count_lines(iter_dir / "pairs.jsonl") == artifact.pair_count);
  CHECK(count_lines(iter_dir / "mask_decisions.jsonl") ==
        artifact.selected_count);
  CHECK(std::filesystem::exists(iter_dir / "checkpoint" / "state.json"));
  CHECK(artifact.output.state_ref ==
        (iter_dir / "checkpoint" / "state.json").string());
}

TEST_CASE("run_iteration validates its corpus and iteration index") {
  const synth::World world = synth::make_world(7, 40, 0);
  MockBackend backend(world.mock_config());
  const HypothesisTemplate tmpl("This example is [].");
  const SelfTrainConfig config = loop_config();
  TempDir tmp;

  Corpus test_role = world.unlabeled;
  test_role.role = CorpusRole::kTest;
  test_role.labels.assign(test_role.size(), "sports");
  CHECK_THROWS_AS(
      run_iteration(backend, backend.base_handle(), test_role, world.classes,
                    tmpl, config, 1, tmp.path(), nullptr),
      ValidationError);

  Corpus empty;
  empty.dataset_id = "synth";
  empty.role = CorpusRole::kUnlabeled;
  CHECK_THROWS_AS(
      run_iteration(backend, backend.base_handle(), empty, world.classes,
                    tmpl, config, 1, tmp.path(), nullptr),
      ValidationError);

  CHECK_THROWS_AS(
      run_iteration(backend, backend.base_handle(), world.unlabeled,
                    world.classes, tmpl, config, 0, tmp.path(), nullptr),
      InternalError);
}

TEST_CASE("run_self_training chains iterations and records evaluations") {
  const synth::World world = synth::make_world(11, 150, 0);
  MockBackend backend(world.mock_config());
  Masker masker(*world.store, backend.unk_token());
  masker.prepare(world.classes);
  const HypothesisTemplate tmpl("This example is [].");
  const SelfTrainConfig config = loop_config();
  TempDir tmp;

  std::vector<std::string> tags;
  const SelfTrainOutcome outcome =
      run_self_training(backend, world.unlabeled, world.classes, tmpl, config,
                        tmp.path(), &masker, recording_eval(tags));

  CHECK_FALSE(outcome.resumed);
  CHECK(outcome.iterations_run == 2);
  CHECK(outcome.manifest.status == "complete");
  REQUIRE(outcome.manifest.iterations.size() == 2);
  CHECK(outcome.final_handle.id == outcome.manifest.iterations[1].output.id);
  CHECK(tags == std::vector<std::string>{"base", "after-iteration-1",
                                         "after-iteration-2"});
  REQUIRE(outcome.manifest.evaluations.size() == 3);
  CHECK(outcome.manifest.evaluations[0].tag == "base");
  CHECK(outcome.manifest.evaluations[2].tag == "after-iteration-2");

  CHECK(outcome.manifest.backend_kind == "mock");
  CHECK(outcome.manifest.dataset_id == "synth");
  CHECK(outcome.manifest.template_pattern == tmpl.pattern());
  CHECK(outcome.manifest.class_names == world.classes.names());
  CHECK(outcome.manifest.config_digest == config_digest(config));
  CHECK(outcome.manifest.corpus_digest == world.unlabeled.digest());
  CHECK(outcome.manifest.effective_config == to_json(config));
  CHECK_FALSE(outcome.manifest.run_id.empty());

  // M -> M' -> M'' chaining with lineage growth.
  const IterationArtifact& first = outcome.manifest.iterations[0];
  const IterationArtifact& second = outcome.manifest.iterations[1];
  CHECK(first.input.id == backend.base_handle().id);
  CHECK(second.input.id == first.output.id);
  CHECK(first.output.lineage ==
        std::vector<std::string>{backend.base_handle().id});
  CHECK(second.output.lineage ==
        std::vector<std::string>{backend.base_handle().id, first.output.id});

  // The lock is gone and the on-disk manifest matches the returned one.
  CHECK_FALSE(std::filesystem::exists(tmp / "lock"));
  const RunManifest loaded = load_manifest(tmp.path());
  CHECK(to_json(loaded) == to_json(outcome.manifest));
}

TEST_CASE("run_self_training resumes a complete run without touching it") {
  const synth::World world = synth::make_world(11, 150, 0);
  const HypothesisTemplate tmpl("This example is [].");
  const SelfTrainConfig config = loop_config();
  TempDir tmp;

  std::string final_id;
  {
    MockBackend backend(world.mock_config());
    Masker masker(*world.store, backend.unk_token());
    masker.prepare(world.classes);
    final_id = run_self_training(backend, world.unlabeled, world.classes,
                                 tmpl, config, tmp.path(), &masker)
                   .final_handle.id;
  }

  // Fresh backend instance: nothing is cached in memory.
  MockBackend backend(world.mock_config());
  Masker masker(*world.store, backend.unk_token());
  masker.prepare(world.classes);
  const SelfTrainOutcome again =
      run_self_training(backend, world.unlabeled, world.classes, tmpl, config,
                        tmp.path(), &masker);
  CHECK(again.resumed);
  CHECK(again.iterations_run == 0);
  CHECK(again.final_handle.id == final_id);
  CHECK(again.manifest.status == "complete");
}

TEST_CASE("resume refuses changed config, corpus or cli overrides") {
  const synth::World world = synth::make_world(13, 120, 0);
  const HypothesisTemplate tmpl("This example is [].");
  SelfTrainConfig config = loop_config();
  config.masking_enabled = false;
  TempDir tmp;

  {
    MockBackend backend(world.mock_config());
    run_self_training(backend, world.unlabeled, world.classes, tmpl, config,
                      tmp.path());
  }

  MockBackend backend(world.mock_config());

  SelfTrainConfig changed = config;
  changed.per_class_fraction = 0.03;
  CHECK_THROWS_AS(run_self_training(backend, world.unlabeled, world.classes,
                                    tmpl, changed, tmp.path()),
                  ConfigError);

  Corpus grown = world.unlabeled;
  grown.examples.push_back({"extra", "an extra unlabeled text"});
  CHECK_THROWS_AS(run_self_training(backend, grown, world.classes, tmpl,
                                    config, tmp.path()),
                  ConfigError);

  const nlohmann::ordered_json cli = {{"model_tag", "other"}};
  CHECK_THROWS_AS(run_self_training(backend, world.unlabeled, world.classes,
                                    tmpl, config, tmp.path(), nullptr, {},
                                    &cli),
                  ConfigError);
}

TEST_CASE("masking flag gates the masker requirement and the artifact") {
  const synth::World world = synth::make_world(17, 100, 0);
  MockBackend backend(world.mock_config());
  const HypothesisTemplate tmpl("This example is [].");
  SelfTrainConfig config = loop_config();
  config.iterations = 1;
  TempDir tmp;

  // Enabled masking without a masker is a configuration error.
  CHECK_THROWS_AS(run_self_training(backend, world.unlabeled, world.classes,
                                    tmpl, config, tmp.path()),
                  ConfigError);

  config.masking_enabled = false;
  const SelfTrainOutcome outcome = run_self_training(
      backend, world.unlabeled, world.classes, tmpl, config, tmp.path());
  REQUIRE(outcome.manifest.iterations.size() == 1);
  const IterationArtifact& artifact = outcome.manifest.iterations[0];
  CHECK(artifact.mask_decisions_file.empty());
  CHECK(artifact.masked_count == 0);
  CHECK_FALSE(
      std::filesystem::exists(tmp / "iter_1" / "mask_decisions.jsonl"));
}

TEST_CASE("an interrupted run resumes after its last completed iteration") {
  const synth::World world = synth::make_world(19, 150, 0);
  const HypothesisTemplate tmpl("This example is [].");
  SelfTrainConfig config = loop_config();
  config.masking_enabled = false;
  TempDir interrupted;
  TempDir control;

  {
    MockBackend inner(world.mock_config());
    FlakyBackend flaky(inner, 2);  // fail the second fine-tune
    CHECK_THROWS_AS(run_self_training(flaky, world.unlabeled, world.classes,
                                      tmpl, config, interrupted.path()),
                    TransportError);
  }

  // The crash released the lock and left one completed iteration behind.
  CHECK_FALSE(std::filesystem::exists(interrupted / "lock"));
  const RunManifest partial = load_manifest(interrupted.path());
  CHECK(partial.status == "running");
  REQUIRE(partial.iterations.size() == 1);

  MockBackend resumed_backend(world.mock_config());
  const SelfTrainOutcome resumed =
      run_self_training(resumed_backend, world.unlabeled, world.classes, tmpl,
                        config, interrupted.path());
  CHECK(resumed.resumed);
  CHECK(resumed.iterations_run == 1);
  CHECK(resumed.manifest.status == "complete");
  REQUIRE(resumed.manifest.iterations.size() == 2);

  MockBackend control_backend(world.mock_config());
  const SelfTrainOutcome straight =
      run_self_training(control_backend, world.unlabeled, world.classes, tmpl,
                        config, control.path());

  // The resumed run converges on the same artifacts as an uninterrupted one.
  CHECK(resumed.final_handle.id == straight.final_handle.id);
  for (int k = 1; k <= 2; ++k) {
    const std::string iter = "iter_" + std::to_string(k);
    CHECK(resumed.manifest.iterations[k - 1].scores_digest ==
          straight.manifest.iterations[k - 1].scores_digest);
    CHECK(read_file(interrupted / iter / "pseudo_labels.jsonl") ==
          read_file(control / iter / "pseudo_labels.jsonl"));
    CHECK(read_file(interrupted / iter / "pairs.jsonl") ==
          read_file(control / iter / "pairs.jsonl"));
  }
}

TEST_CASE("two fresh runs with one config produce byte-identical artifacts") {
  const synth::World world = synth::make_world(23, 150, 0);
  const HypothesisTemplate tmpl("This example is [].");
  const SelfTrainConfig config = loop_config();
  TempDir a;
  TempDir b;

  auto run_into = [&](const std::filesystem::path& dir) {
    MockBackend backend(world.mock_config());
    Masker masker(*world.store, backend.unk_token());
    masker.prepare(world.classes);
    return run_self_training(backend, world.unlabeled, world.classes, tmpl,
                             config, dir, &masker);
  };
  const SelfTrainOutcome first = run_into(a.path());
  const SelfTrainOutcome second = run_into(b.path());

  CHECK(first.final_handle.id == second.final_handle.id);
  for (int k = 1; k <= config.iterations; ++k) {
    const std::string iter = "iter_" + std::to_string(k);
    CHECK(first.manifest.iterations[k - 1].scores_digest ==
          second.manifest.iterations[k - 1].scores_digest);
    for (const char* name :
         {"pseudo_labels.jsonl", "pairs.jsonl", "mask_decisions.jsonl"}) {
      CHECK(read_file(a / iter / name) == read_file(b / iter / name));
    }
  }
}

TEST_CASE("manifest json round trips through disk") {
  RunManifest manifest;
  manifest.run_id = "run42";
  manifest.status = "running";
  manifest.backend_kind = "mock";
  manifest.dataset_id = "synth";
  manifest.template_pattern = "This example is [].";
  manifest.class_names = {"a", "b"};
  manifest.config_digest = "cfg";
  manifest.corpus_digest = "corp";
  manifest.effective_config = {{"iterations", 2}};
  manifest.cli_config = {{"model_tag", "mock"}};
  IterationArtifact artifact;
  artifact.iteration = 1;
  artifact.scores_digest = "d";
  artifact.scores_file = "iter_1/scores.bin";
  artifact.pseudo_labels_file = "iter_1/pseudo_labels.jsonl";
  artifact.pairs_file = "iter_1/pairs.jsonl";
  artifact.input = {"mock", "m0", "builtin:base", {}};
  artifact.output = {"mock", "m1", "memory:m1", {"m0"}};
  artifact.duration_seconds = 0.25;
  artifact.selected_count = 4;
  artifact.pair_count = 8;
  manifest.iterations.push_back(artifact);
  manifest.evaluations.push_back({"base", 0.5, 100});

  TempDir tmp;
  CHECK_FALSE(manifest_exists(tmp.path()));
  save_manifest(tmp.path(), manifest);
  CHECK(manifest_exists(tmp.path()));
  const RunManifest loaded = load_manifest(tmp.path());
  CHECK(to_json(loaded) == to_json(manifest));

  // Model handles survive their own round trip.
  const ModelHandle back = model_handle_from_json(to_json(artifact.output));
  CHECK(back.id == "m1");
  CHECK(back.lineage == std::vector<std::string>{"m0"});
}

TEST_CASE("load_manifest distinguishes missing, corrupt and incomplete") {
  TempDir tmp;
  CHECK_THROWS_AS(load_manifest(tmp.path()), StorageError);

  write_file(tmp / "manifest.json", "{not json");
  CHECK_THROWS_WITH_AS(load_manifest(tmp.path()),
                       doctest::Contains("corrupt"), StorageError);

  write_file(tmp / "manifest.json", R"({"run_id": "x"})");
  CHECK_THROWS_WITH_AS(load_manifest(tmp.path()),
                       doctest::Contains("missing fields"), StorageError);
}

TEST_CASE("config digests are stable and sensitive") {
  const SelfTrainConfig a = loop_config();
  SelfTrainConfig b = loop_config();
  CHECK(config_digest(a) == config_digest(b));
  b.seed = a.seed + 1;
  CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("run lock refuses live holders and breaks stale ones") {
  TempDir tmp;
  const std::string host = local_hostname();

  SUBCASE("second lock on a held directory fails") {
    RunLock held(tmp.path());
    CHECK_THROWS_AS(RunLock(tmp.path()), LockError);
  }

  SUBCASE("a live pid on this host is honored") {
    write_file(tmp / "lock", "pid " + std::to_string(getpid()) + "\nhost " +
                                 host + "\n");
    CHECK_THROWS_WITH_AS(RunLock(tmp.path()),
                         doctest::Contains(std::to_string(getpid()).c_str()),
                         LockError);
  }

  SUBCASE("a foreign host is honored even for a dead-looking pid") {
    write_file(tmp / "lock",
               "pid 999999\nhost not-this-host.example\n");
    CHECK_THROWS_AS(RunLock(tmp.path()), LockError);
  }

  SUBCASE("a dead pid on this host is broken automatically") {
    write_file(tmp / "lock", "pid " + std::to_string(dead_pid()) +
                                 "\nhost " + host + "\n");
    CHECK_NOTHROW(RunLock(tmp.path()));
    // The broken-and-reacquired lock was released on destruction.
    CHECK_FALSE(std::filesystem::exists(tmp / "lock"));
  }

  SUBCASE("release makes the directory lockable again") {
    { RunLock first(tmp.path()); }
    CHECK_NOTHROW(RunLock(tmp.path()));
  }
}

}  // TEST_SUITE("loop")
