#include "zsst/loop.hpp"

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"
#include "zsst/rng.hpp"
#include "zsst/selection.hpp"

namespace zsst {

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kLockName = "lock";

std::string iter_dir_name(int iteration) {
  return "iter_" + std::to_string(iteration);
}

void write_mask_decisions_jsonl(const std::filesystem::path& path,
                                std::span<const PseudoLabel> labels,
                                std::span<const MaskResult> masks,
                                int iteration) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw StorageError("cannot write mask decisions: " + path.string());
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    nlohmann::ordered_json line;
    line["example_id"] = labels[i].example_id;
    line["class"] = labels[i].class_name;
    line["masked"] = masks[i].masked;
    line["token"] = masks[i].masked_token;
    line["span_begin"] = masks[i].span_begin;
    line["span_end"] = masks[i].span_end;
    line["similarity"] = masks[i].similarity;
    line["iteration"] = iteration;
    out << line.dump() << "\n";
  }
  out.flush();
  if (!out) {
    throw StorageError("failed writing mask decisions: " + path.string());
  }
}

std::string hostname() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown-host";
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json(const ModelHandle& handle) {
  nlohmann::ordered_json j;
  j["kind"] = handle.kind;
  j["id"] = handle.id;
  j["state_ref"] = handle.state_ref;
  j["lineage"] = handle.lineage;
  return j;
}

ModelHandle model_handle_from_json(const nlohmann::json& j) {
  ModelHandle handle;
  handle.kind = j.at("kind").get<std::string>();
  handle.id = j.at("id").get<std::string>();
  handle.state_ref = j.at("state_ref").get<std::string>();
  handle.lineage = j.at("lineage").get<std::vector<std::string>>();
  return handle;
}

namespace {

nlohmann::ordered_json to_json(const IterationArtifact& a) {
  nlohmann::ordered_json j;
  j["iteration"] = a.iteration;
  j["scores_digest"] = a.scores_digest;
  j["scores_file"] = a.scores_file;
  j["pseudo_labels_file"] = a.pseudo_labels_file;
  j["pairs_file"] = a.pairs_file;
  j["mask_decisions_file"] = a.mask_decisions_file;
  j["input"] = zsst::to_json(a.input);
  j["output"] = zsst::to_json(a.output);
  j["duration_seconds"] = a.duration_seconds;
  j["selected_count"] = a.selected_count;
  j["pair_count"] = a.pair_count;
  j["masked_count"] = a.masked_count;
  return j;
}

IterationArtifact iteration_from_json(const nlohmann::json& j) {
  IterationArtifact a;
  a.iteration = j.at("iteration").get<int>();
  a.scores_digest = j.at("scores_digest").get<std::string>();
  a.scores_file = j.at("scores_file").get<std::string>();
  a.pseudo_labels_file = j.at("pseudo_labels_file").get<std::string>();
  a.pairs_file = j.at("pairs_file").get<std::string>();
  a.mask_decisions_file = j.at("mask_decisions_file").get<std::string>();
  a.input = model_handle_from_json(j.at("input"));
  a.output = model_handle_from_json(j.at("output"));
  a.duration_seconds = j.at("duration_seconds").get<double>();
  a.selected_count = j.at("selected_count").get<std::size_t>();
  a.pair_count = j.at("pair_count").get<std::size_t>();
  a.masked_count = j.at("masked_count").get<std::size_t>();
  return a;
}

}  // namespace

nlohmann::ordered_json to_json(const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["run_id"] = manifest.run_id;
  j["status"] = manifest.status;
  j["backend_kind"] = manifest.backend_kind;
  j["dataset_id"] = manifest.dataset_id;
  j["template"] = manifest.template_pattern;
  j["classes"] = manifest.class_names;
  j["config_digest"] = manifest.config_digest;
  j["corpus_digest"] = manifest.corpus_digest;
  j["config"] = manifest.effective_config;
  j["cli_config"] = manifest.cli_config.is_null()
                        ? nlohmann::ordered_json::object()
                        : manifest.cli_config;
  j["iterations"] = nlohmann::ordered_json::array();
  for (const IterationArtifact& a : manifest.iterations) {
    j["iterations"].push_back(to_json(a));
  }
  j["evaluations"] = nlohmann::ordered_json::array();
  for (const EvalSnapshot& e : manifest.evaluations) {
    j["evaluations"].push_back({{"tag", e.tag},
                                {"accuracy", e.accuracy},
                                {"n_examples", e.n_examples}});
  }
  return j;
}

RunManifest manifest_from_json(const nlohmann::ordered_json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.status = j.at("status").get<std::string>();
  m.backend_kind = j.at("backend_kind").get<std::string>();
  m.dataset_id = j.at("dataset_id").get<std::string>();
  m.template_pattern = j.at("template").get<std::string>();
  m.class_names = j.at("classes").get<std::vector<std::string>>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.corpus_digest = j.at("corpus_digest").get<std::string>();
  m.effective_config = j.at("config");
  m.cli_config = j.value("cli_config", nlohmann::ordered_json::object());
  for (const auto& item : j.at("iterations")) {
    m.iterations.push_back(iteration_from_json(item));
  }
  for (const auto& item : j.at("evaluations")) {
    EvalSnapshot e;
    e.tag = item.at("tag").get<std::string>();
    e.accuracy = item.at("accuracy").get<double>();
    e.n_examples = item.at("n_examples").get<std::size_t>();
    m.evaluations.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::filesystem::path& run_dir,
                   const RunManifest& manifest) {
  const std::filesystem::path path = run_dir / kManifestName;
  const std::filesystem::path tmp = run_dir / (std::string(kManifestName) +
                                               ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw StorageError("cannot write manifest: " + tmp.string());
    }
    out << to_json(manifest).dump(2) << "\n";
    out.flush();
    if (!out) {
      throw StorageError("failed writing manifest: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw StorageError("cannot move manifest into place: " + ec.message());
  }
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  const std::filesystem::path path = run_dir / kManifestName;
  std::ifstream in(path);
  if (!in) {
    throw StorageError("cannot read manifest: " + path.string());
  }
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StorageError("corrupt manifest " + path.string() + ": " + e.what());
  }
  try {
    return manifest_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw StorageError("manifest " + path.string() +
                       " is missing fields: " + e.what());
  }
}

bool manifest_exists(const std::filesystem::path& run_dir) {
  return std::filesystem::exists(run_dir / kManifestName);
}

std::string config_digest(const SelfTrainConfig& config) {
  return digest_hex(to_json(config).dump());
}

RunLock::RunLock(const std::filesystem::path& run_dir)
    : path_(run_dir / kLockName) {
  acquire();
}

void RunLock::acquire() {
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      std::string content = "pid " + std::to_string(getpid()) + "\nhost " +
                            hostname() + "\n";
      ssize_t ignored = ::write(fd, content.data(), content.size());
      (void)ignored;
      ::close(fd);
      held_ = true;
      return;
    }
    if (errno != EEXIST) {
      throw StorageError("cannot create lock file " + path_.string() + ": " +
                         std::strerror(errno));
    }

    // Parse the holder; break the lock only for a dead pid on this host.
    std::ifstream in(path_);
    std::string word, pid_str, host;
    long pid = -1;
    while (in >> word) {
      if (word == "pid") in >> pid_str;
      if (word == "host") in >> host;
    }
    if (!pid_str.empty()) pid = std::strtol(pid_str.c_str(), nullptr, 10);

    const bool stale = pid > 0 && host == hostname() &&
                       ::kill(static_cast<pid_t>(pid), 0) != 0 &&
                       errno == ESRCH;
    if (stale && attempt == 0) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
      continue;
    }
    throw LockError("run directory is locked by pid " + pid_str +
                    " on host " + host + " (" + path_.string() + ")");
  }
}

RunLock::~RunLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

IterationArtifact run_iteration(Backend& backend, const ModelHandle& input,
                                const Corpus& unlabeled,
                                const ClassSet& classes,
                                const HypothesisTemplate& tmpl,
                                const SelfTrainConfig& config, int iteration,
                                const std::filesystem::path& run_dir,
                                const Masker* masker) {
  if (unlabeled.role != CorpusRole::kUnlabeled) {
    throw ValidationError("self-training needs an unlabeled corpus, got " +
                          to_string(unlabeled.role));
  }
  if (unlabeled.size() == 0) {
    throw ValidationError("self-training on an empty corpus");
  }
  if (iteration < 1) {
    throw InternalError("iteration index must be 1-based");
  }

  const auto started = std::chrono::steady_clock::now();
  const std::filesystem::path iter_dir = run_dir / iter_dir_name(iteration);
  std::error_code ec;
  std::filesystem::create_directories(iter_dir, ec);
  if (ec) {
    throw StorageError("cannot create iteration directory " +
                       iter_dir.string() + ": " + ec.message());
  }

  IterationArtifact artifact;
  artifact.iteration = iteration;
  artifact.input = input;

  const ScoreMatrix scores =
      build_score_matrix(backend, input, unlabeled.examples, classes, tmpl);
  write_score_matrix(iter_dir / "scores.bin", scores);
  artifact.scores_file = iter_dir_name(iteration) + "/scores.bin";
  artifact.scores_digest = digest_file_hex(iter_dir / "scores.bin");

  const std::size_t n = resolve_n(config, unlabeled.size());
  const std::vector<SelectedExample> positives = select_positives(scores, n);
  artifact.selected_count = positives.size();

  // Two derived streams per iteration: one for negative sampling, one for
  // the fine-tune shuffle.
  const std::uint64_t iter_seed =
      mix_seed(config.seed, static_cast<std::uint64_t>(iteration));
  Rng rng(mix_seed(iter_seed, 0));

  TrainingBatch batch = build_training_pairs(
      unlabeled.examples, scores.raw(), positives, classes, tmpl,
      config.contrast_strategy, config.masking_enabled ? masker : nullptr,
      iteration, rng);
  artifact.pair_count = batch.records.size();
  artifact.masked_count = batch.masked_count;

  write_pseudo_labels_jsonl(iter_dir / "pseudo_labels.jsonl", batch.labels);
  artifact.pseudo_labels_file =
      iter_dir_name(iteration) + "/pseudo_labels.jsonl";
  write_pairs_jsonl(iter_dir / "pairs.jsonl", batch.records);
  artifact.pairs_file = iter_dir_name(iteration) + "/pairs.jsonl";
  if (config.masking_enabled && masker) {
    write_mask_decisions_jsonl(iter_dir / "mask_decisions.jsonl",
                               batch.labels, batch.masks, iteration);
    artifact.mask_decisions_file =
        iter_dir_name(iteration) + "/mask_decisions.jsonl";
  }

  const std::vector<NliTrainingPair> pairs = to_training_pairs(batch.records);
  artifact.output = backend.fine_tune(input, pairs, config.fine_tune,
                                      mix_seed(iter_seed, 1),
                                      iter_dir / "checkpoint");

  artifact.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    started)
          .count();
  return artifact;
}

SelfTrainOutcome run_self_training(
    Backend& backend, const Corpus& unlabeled, const ClassSet& classes,
    const HypothesisTemplate& tmpl, const SelfTrainConfig& config,
    const std::filesystem::path& run_dir, const Masker* masker,
    const EvalCallback& eval, const nlohmann::ordered_json* cli_config) {
  config.validate();
  if (config.masking_enabled && masker == nullptr) {
    throw ConfigError(
        "masking is enabled but no embedding store was provided");
  }

  std::error_code ec;
  std::filesystem::create_directories(run_dir, ec);
  if (ec) {
    throw StorageError("cannot create run directory " + run_dir.string() +
                       ": " + ec.message());
  }
  RunLock lock(run_dir);

  std::string cfg_digest = config_digest(config);
  if (cli_config && !cli_config->empty()) {
    cfg_digest = digest_hex(cfg_digest + cli_config->dump());
  }
  const std::string corpus_digest = unlabeled.digest();

  SelfTrainOutcome outcome;
  RunManifest manifest;
  int start_iteration = 0;  // completed so far

  if (manifest_exists(run_dir)) {
    manifest = load_manifest(run_dir);
    if (manifest.config_digest != cfg_digest) {
      throw ConfigError("resume refused: run has config digest " +
                        manifest.config_digest + ", current config is " +
                        cfg_digest);
    }
    if (manifest.corpus_digest != corpus_digest) {
      throw ConfigError("resume refused: unlabeled corpus digest changed");
    }
    outcome.resumed = true;
    start_iteration = static_cast<int>(manifest.iterations.size());
  } else {
    manifest.run_id = digest_hex(cfg_digest + corpus_digest);
    manifest.status = "running";
    manifest.backend_kind = std::string(backend.kind());
    manifest.dataset_id = unlabeled.dataset_id;
    manifest.template_pattern = tmpl.pattern();
    manifest.class_names = classes.names();
    manifest.config_digest = cfg_digest;
    manifest.corpus_digest = corpus_digest;
    manifest.effective_config = to_json(config);
    if (cli_config) manifest.cli_config = *cli_config;
    if (eval) {
      if (std::optional<EvalSnapshot> snap = eval(backend.base_handle(), 0)) {
        manifest.evaluations.push_back(std::move(*snap));
      }
    }
    save_manifest(run_dir, manifest);
  }

  ModelHandle current = manifest.iterations.empty()
                            ? backend.base_handle()
                            : manifest.iterations.back().output;

  for (int k = start_iteration + 1; k <= config.iterations; ++k) {
    IterationArtifact artifact = run_iteration(
        backend, current, unlabeled, classes, tmpl, config, k, run_dir,
        masker);
    current = artifact.output;
    manifest.iterations.push_back(std::move(artifact));
    if (eval) {
      if (std::optional<EvalSnapshot> snap = eval(current, k)) {
        manifest.evaluations.push_back(std::move(*snap));
      }
    }
    save_manifest(run_dir, manifest);
    ++outcome.iterations_run;
  }

  manifest.status = "complete";
  save_manifest(run_dir, manifest);

  outcome.final_handle = current;
  outcome.manifest = std::move(manifest);
  return outcome;
}

}  // namespace zsst
