#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zsst/config.hpp"
#include "zsst/core.hpp"
#include "zsst/datasets.hpp"
#include "zsst/embeddings.hpp"
#include "zsst/errors.hpp"
#include "zsst/eval.hpp"
#include "zsst/loop.hpp"
#include "zsst/masking.hpp"
#include "zsst/mock_backend.hpp"
#include "zsst/rng.hpp"
#include "zsst/selection.hpp"
#include "zsst/stats.hpp"
#include "zsst/transformer_adapter.hpp"

namespace {

using namespace zsst;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

// Flag values layered on top of the config file (defaults < file < flags).
// Every field mirrors one config key.
struct Overrides {
  std::optional<std::string> backend, model_tag, template_pattern, run_dir,
      classes_file, embeddings_file, unk_token;
  std::optional<std::string> dataset_id, unlabeled_file, test_file, format;
  std::optional<std::size_t> max_unlabeled;
  std::optional<double> per_class_fraction, learning_rate, mock_scale;
  std::optional<int> iterations, epochs, batch_size;
  std::optional<std::string> contrast_strategy, optimizer, loss;
  std::optional<bool> masking_enabled, mock_train_scale;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::uint64_t>> seeds;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--backend", o.backend, "mock | transformer");
  cmd->add_option("--model-tag", o.model_tag, "label used in reports");
  cmd->add_option("--template", o.template_pattern,
                  "hypothesis pattern with one [] slot");
  cmd->add_option("--run-dir", o.run_dir, "run directory");
  cmd->add_option("--classes-file", o.classes_file,
                  "JSON file with extra dataset -> class-name entries");
  cmd->add_option("--embeddings-file", o.embeddings_file,
                  "word-vector file (default: $ZSST_EMBEDDINGS_PATH)");
  cmd->add_option("--unk-token", o.unk_token, "model unknown-token string");
  cmd->add_option("--dataset-id", o.dataset_id, "dataset registry id");
  cmd->add_option("--unlabeled-file", o.unlabeled_file,
                  "unlabeled corpus path");
  cmd->add_option("--test-file", o.test_file, "labeled test corpus path");
  cmd->add_option("--format", o.format, "jsonl | csv");
  cmd->add_option("--max-unlabeled", o.max_unlabeled,
                  "subsample cap for the unlabeled pool (0 = all)");
  cmd->add_option("--per-class-fraction", o.per_class_fraction,
                  "fraction of |U| selected per class");
  cmd->add_option("--iterations", o.iterations, "self-training iterations");
  cmd->add_option("--strategy", o.contrast_strategy,
                  "random | closest | furthest | all");
  cmd->add_option("--masking", o.masking_enabled, "enable token masking");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--seeds", o.seeds, "seed list for multi-seed commands");
  cmd->add_option("--epochs", o.epochs, "fine-tune epochs");
  cmd->add_option("--learning-rate", o.learning_rate, "fine-tune step size");
  cmd->add_option("--batch-size", o.batch_size, "fine-tune batch size");
  cmd->add_option("--optimizer", o.optimizer, "adamw | sgd");
  cmd->add_option("--loss", o.loss, "cross_entropy");
  cmd->add_option("--mock-scale", o.mock_scale, "mock cosine scale");
  cmd->add_option("--mock-train-scale", o.mock_train_scale,
                  "train the mock scale parameter");
}

AppConfig resolve_config(const std::string& config_path, const Overrides& o) {
  AppConfig cfg =
      config_path.empty() ? AppConfig{} : load_app_config(config_path);
  if (o.backend) cfg.backend = *o.backend;
  if (o.model_tag) cfg.model_tag = *o.model_tag;
  if (o.template_pattern) cfg.template_pattern = *o.template_pattern;
  if (o.run_dir) cfg.run_dir = *o.run_dir;
  if (o.classes_file) cfg.classes_file = *o.classes_file;
  if (o.embeddings_file) cfg.embeddings_file = *o.embeddings_file;
  if (o.unk_token) cfg.unk_token = *o.unk_token;
  if (o.dataset_id) cfg.dataset.id = *o.dataset_id;
  if (o.unlabeled_file) cfg.dataset.unlabeled_file = *o.unlabeled_file;
  if (o.test_file) cfg.dataset.test_file = *o.test_file;
  if (o.format) cfg.dataset.format = *o.format;
  if (o.max_unlabeled) cfg.dataset.max_unlabeled = *o.max_unlabeled;
  if (o.per_class_fraction) {
    cfg.self_train.per_class_fraction = *o.per_class_fraction;
  }
  if (o.iterations) cfg.self_train.iterations = *o.iterations;
  if (o.contrast_strategy) {
    cfg.self_train.contrast_strategy = parse_strategy(*o.contrast_strategy);
  }
  if (o.masking_enabled) cfg.self_train.masking_enabled = *o.masking_enabled;
  if (o.seed) cfg.self_train.seed = *o.seed;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.epochs) cfg.self_train.fine_tune.epochs = *o.epochs;
  if (o.learning_rate) {
    cfg.self_train.fine_tune.learning_rate = *o.learning_rate;
  }
  if (o.batch_size) cfg.self_train.fine_tune.batch_size = *o.batch_size;
  if (o.optimizer) {
    cfg.self_train.fine_tune.optimizer = parse_optimizer(*o.optimizer);
  }
  if (o.loss) cfg.self_train.fine_tune.loss = parse_loss(*o.loss);
  if (o.mock_scale) cfg.mock.scale = *o.mock_scale;
  if (o.mock_train_scale) cfg.mock.train_scale = *o.mock_train_scale;
  apply_embeddings_env_default(cfg);
  cfg.validate();
  return cfg;
}

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::kJsonl;
  if (s == "csv") return CorpusFormat::kCsv;
  throw ConfigError("unknown dataset format '" + s + "'");
}

std::shared_ptr<const EmbeddingStore> load_store(const AppConfig& cfg) {
  if (cfg.embeddings_file.empty()) {
    throw ConfigError(std::string("no embedding file configured; set "
                                  "embeddings_file or $") +
                      kEmbeddingsEnvVar);
  }
  auto store = std::make_shared<EmbeddingStore>(
      load_embeddings(cfg.embeddings_file));
  store->set_stopwords(default_stopwords());
  return store;
}

// The mock backend owns a store; lazily share one instance with the masker.
struct Stack {
  AppConfig cfg;
  DatasetRegistry registry = DatasetRegistry::builtin();
  std::shared_ptr<const EmbeddingStore> store;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<Masker> masker;

  const EmbeddingStore& embeddings() {
    if (!store) store = load_store(cfg);
    return *store;
  }
};

Stack make_stack(AppConfig cfg, bool need_masker) {
  Stack s;
  s.cfg = std::move(cfg);
  if (!s.cfg.classes_file.empty()) s.registry.load_file(s.cfg.classes_file);

  if (s.cfg.backend == "mock") {
    s.embeddings();
    MockConfig mc;
    mc.template_pattern = s.cfg.template_pattern;
    mc.embeddings = s.store;
    mc.scale = s.cfg.mock.scale;
    mc.initial_bias = s.cfg.mock.initial_bias;
    mc.train_scale = s.cfg.mock.train_scale;
    mc.unk_token = s.cfg.unk_token;
    s.backend = std::make_unique<MockBackend>(std::move(mc));
  } else {
    AdapterConfig ac;
    ac.command = s.cfg.adapter.command;
    ac.model_tag = s.cfg.model_tag;
    ac.unk_token = s.cfg.unk_token;
    s.backend = std::make_unique<TransformerAdapter>(std::move(ac));
  }

  if (need_masker && s.cfg.self_train.masking_enabled) {
    s.embeddings();
    s.masker = std::make_unique<Masker>(*s.store, s.cfg.unk_token);
    s.masker->prepare(s.registry.get(s.cfg.dataset.id));
  }
  return s;
}

Corpus load_role(const AppConfig& cfg, CorpusRole role) {
  const bool test = role != CorpusRole::kUnlabeled;
  const std::string& path =
      test ? cfg.dataset.test_file : cfg.dataset.unlabeled_file;
  if (path.empty()) {
    throw ConfigError(std::string("dataset.") +
                      (test ? "test_file" : "unlabeled_file") +
                      " is not configured");
  }
  Corpus corpus = load_corpus(path, parse_format(cfg.dataset.format), role);
  corpus.dataset_id = cfg.dataset.id;
  if (!test && cfg.dataset.max_unlabeled > 0 &&
      corpus.size() > cfg.dataset.max_unlabeled) {
    corpus = sample_unlabeled(corpus, cfg.dataset.max_unlabeled,
                              cfg.self_train.seed);
  }
  return corpus;
}

std::filesystem::path report_path(const AppConfig& cfg,
                                  const std::string& name) {
  if (cfg.run_dir.empty()) return name;
  std::filesystem::create_directories(cfg.run_dir);
  return std::filesystem::path(cfg.run_dir) / name;
}

int cmd_eval_zero_shot(const AppConfig& cfg) {
  Stack s = make_stack(cfg, /*need_masker=*/false);
  const ClassSet& classes = s.registry.get(s.cfg.dataset.id);
  const HypothesisTemplate tmpl(s.cfg.template_pattern);
  const Corpus test = load_role(s.cfg, CorpusRole::kTest);

  const EvalResult result =
      evaluate_accuracy(*s.backend, s.backend->base_handle(), test, classes,
                        tmpl, "base", s.cfg.self_train.seed);
  const AggregateResult aggregate = aggregate_values({{result.accuracy}});
  const std::filesystem::path out = report_path(s.cfg, "report.json");
  write_report_json(out, s.cfg.model_tag, s.cfg.dataset.id, aggregate);

  std::printf("[eval-zero-shot] dataset=%s model=%s accuracy=%.4f n=%zu\n",
              s.cfg.dataset.id.c_str(), s.cfg.model_tag.c_str(),
              result.accuracy, result.n_examples);
  std::printf("[eval-zero-shot] report=%s\n", out.string().c_str());
  return kExitOk;
}

int run_one_self_training(Stack& s, const std::filesystem::path& run_dir,
                          SelfTrainOutcome* outcome_out) {
  const ClassSet& classes = s.registry.get(s.cfg.dataset.id);
  const HypothesisTemplate tmpl(s.cfg.template_pattern);
  const Corpus unlabeled = load_role(s.cfg, CorpusRole::kUnlabeled);

  std::optional<Corpus> test;
  if (!s.cfg.dataset.test_file.empty()) {
    test = load_role(s.cfg, CorpusRole::kTest);
  }

  EvalCallback eval;
  if (test) {
    eval = [&](const ModelHandle& handle, int k) -> std::optional<EvalSnapshot> {
      const std::string tag =
          k == 0 ? "base" : "after-iteration-" + std::to_string(k);
      const EvalResult r =
          evaluate_accuracy(*s.backend, handle, *test, classes, tmpl, tag,
                            s.cfg.self_train.seed);
      std::printf("[self-train] %s accuracy=%.4f n=%zu\n", tag.c_str(),
                  r.accuracy, r.n_examples);
      return EvalSnapshot{tag, r.accuracy, r.n_examples};
    };
  }

  const nlohmann::ordered_json cli_config = to_json(s.cfg);
  SelfTrainOutcome outcome = run_self_training(
      *s.backend, unlabeled, classes, tmpl, s.cfg.self_train, run_dir,
      s.masker.get(), eval, &cli_config);

  std::printf("[self-train] run_dir=%s status=%s iterations_run=%d%s\n",
              run_dir.string().c_str(), outcome.manifest.status.c_str(),
              outcome.iterations_run, outcome.resumed ? " (resumed)" : "");
  if (outcome_out) *outcome_out = std::move(outcome);
  return kExitOk;
}

int cmd_self_train(const AppConfig& cfg) {
  if (cfg.run_dir.empty()) {
    throw ConfigError("self-train needs run_dir");
  }
  Stack s = make_stack(cfg, /*need_masker=*/true);
  return run_one_self_training(s, s.cfg.run_dir, nullptr);
}

int cmd_ablate_masking(const AppConfig& cfg) {
  if (cfg.run_dir.empty()) {
    throw ConfigError("ablate-masking needs run_dir");
  }
  if (cfg.dataset.test_file.empty()) {
    throw ConfigError("ablate-masking needs dataset.test_file");
  }

  std::vector<double> masked_acc, unmasked_acc;
  for (const std::uint64_t seed : cfg.effective_seeds()) {
    for (const bool masked : {true, false}) {
      AppConfig arm = cfg;
      arm.self_train.seed = seed;
      arm.self_train.masking_enabled = masked;
      arm.seeds = {seed};
      const std::filesystem::path run_dir =
          std::filesystem::path(cfg.run_dir) /
          ((masked ? "masked_seed_" : "unmasked_seed_") +
           std::to_string(seed));

      Stack s = make_stack(arm, /*need_masker=*/true);
      SelfTrainOutcome outcome;
      run_one_self_training(s, run_dir, &outcome);

      double final_acc = -1.0;
      for (const EvalSnapshot& snap : outcome.manifest.evaluations) {
        if (snap.tag ==
            "after-iteration-" + std::to_string(arm.self_train.iterations)) {
          final_acc = snap.accuracy;
        }
      }
      if (final_acc < 0.0) {
        throw InternalError("run recorded no final evaluation");
      }
      (masked ? masked_acc : unmasked_acc).push_back(final_acc);
    }
  }

  const AggregateResult masked = aggregate_values(masked_acc);
  const AggregateResult unmasked = aggregate_values(unmasked_acc);
  const std::filesystem::path out =
      std::filesystem::path(cfg.run_dir) / "ablation.json";
  write_ablation_report(out, cfg.dataset.id, masked, unmasked);

  std::printf(
      "[ablate-masking] masked=%.4f±%.4f unmasked=%.4f±%.4f delta=%+.4f\n",
      masked.mean, masked.sem, unmasked.mean, unmasked.sem,
      masked.mean - unmasked.mean);
  std::printf("[ablate-masking] report=%s\n", out.string().c_str());
  return kExitOk;
}

int cmd_heuristic_baseline(const AppConfig& cfg) {
  if (cfg.run_dir.empty()) {
    throw ConfigError("heuristic-baseline needs run_dir");
  }
  Stack s = make_stack(cfg, /*need_masker=*/true);
  const ClassSet& classes = s.registry.get(s.cfg.dataset.id);
  const HypothesisTemplate tmpl(s.cfg.template_pattern);
  const Corpus unlabeled = load_role(s.cfg, CorpusRole::kUnlabeled);

  const HeuristicScores scores =
      heuristic_score_matrix(unlabeled.examples, classes, s.embeddings());
  const std::size_t n = resolve_n(s.cfg.self_train, unlabeled.size());
  const std::vector<SelectedExample> positives = heuristic_select(scores, n);

  Rng rng(mix_seed(mix_seed(s.cfg.self_train.seed, 1), 0));
  TrainingBatch batch = build_training_pairs(
      unlabeled.examples, scores.scores, positives, classes, tmpl,
      s.cfg.self_train.contrast_strategy,
      s.cfg.self_train.masking_enabled ? s.masker.get() : nullptr, 1, rng);

  const std::filesystem::path run_dir = s.cfg.run_dir;
  const std::filesystem::path iter_dir = run_dir / "iter_1";
  std::filesystem::create_directories(iter_dir);
  write_pseudo_labels_jsonl(iter_dir / "pseudo_labels.jsonl", batch.labels);
  write_pairs_jsonl(iter_dir / "pairs.jsonl", batch.records);

  const std::vector<NliTrainingPair> pairs = to_training_pairs(batch.records);
  const ModelHandle tuned = s.backend->fine_tune(
      s.backend->base_handle(), pairs, s.cfg.self_train.fine_tune,
      mix_seed(mix_seed(s.cfg.self_train.seed, 1), 1),
      iter_dir / "checkpoint");

  nlohmann::ordered_json summary;
  summary["dataset"] = s.cfg.dataset.id;
  summary["selected"] = positives.size();
  summary["skipped_unembeddable"] = scores.skipped_count;
  summary["pairs"] = batch.records.size();
  summary["masked"] = batch.masked_count;

  if (!s.cfg.dataset.test_file.empty()) {
    const Corpus test = load_role(s.cfg, CorpusRole::kTest);
    const EvalResult base = evaluate_accuracy(
        *s.backend, s.backend->base_handle(), test, classes, tmpl, "base",
        s.cfg.self_train.seed);
    const EvalResult fin =
        evaluate_accuracy(*s.backend, tuned, test, classes, tmpl,
                          "after-heuristic", s.cfg.self_train.seed);
    summary["base_accuracy"] = base.accuracy;
    summary["final_accuracy"] = fin.accuracy;
    std::printf("[heuristic-baseline] base=%.4f final=%.4f n=%zu\n",
                base.accuracy, fin.accuracy, fin.n_examples);
  }

  const std::filesystem::path out = run_dir / "heuristic_summary.json";
  std::ofstream file(out, std::ios::binary);
  if (!file) {
    throw StorageError("cannot write summary: " + out.string());
  }
  file << summary.dump(2) << "\n";
  file.close();

  std::printf(
      "[heuristic-baseline] selected=%zu skipped=%zu pairs=%zu report=%s\n",
      positives.size(), scores.skipped_count, batch.records.size(),
      out.string().c_str());
  return kExitOk;
}

int cmd_cross_eval(const AppConfig& cfg,
                   const std::vector<std::string>& run_dirs,
                   const std::vector<std::string>& eval_specs,
                   const std::string& out_path) {
  if (run_dirs.empty()) throw ConfigError("cross-eval needs --run");
  if (eval_specs.empty()) throw ConfigError("cross-eval needs --eval");

  Stack s = make_stack(cfg, /*need_masker=*/false);
  const HypothesisTemplate tmpl(s.cfg.template_pattern);

  std::vector<std::string> sources;
  std::map<std::string, ModelHandle> runs;
  for (const std::string& dir : run_dirs) {
    if (!manifest_exists(dir)) {
      std::fprintf(stderr, "warning: %s has no manifest, row absent\n",
                   dir.c_str());
      continue;
    }
    const RunManifest manifest = load_manifest(dir);
    if (std::find(sources.begin(), sources.end(), manifest.dataset_id) ==
        sources.end()) {
      sources.push_back(manifest.dataset_id);
    }
    if (manifest.status != "complete" || manifest.iterations.empty()) {
      std::fprintf(stderr, "warning: run %s is incomplete, cells absent\n",
                   dir.c_str());
      continue;
    }
    if (manifest.backend_kind != s.cfg.backend) {
      std::fprintf(stderr,
                   "warning: run %s used backend '%s', not '%s'; skipped\n",
                   dir.c_str(), manifest.backend_kind.c_str(),
                   s.cfg.backend.c_str());
      continue;
    }
    runs[manifest.dataset_id] = manifest.iterations.back().output;
  }

  std::map<std::string, Corpus> evalsets;
  for (const std::string& spec : eval_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--eval expects dataset_id=path, got '" + spec + "'");
    }
    const std::string id = spec.substr(0, eq);
    Corpus corpus = load_corpus(spec.substr(eq + 1),
                                parse_format(cfg.dataset.format),
                                CorpusRole::kTest);
    corpus.dataset_id = id;
    evalsets.emplace(id, std::move(corpus));
  }

  const CrossTaskMatrix matrix =
      cross_task_matrix(*s.backend, s.backend->base_handle(), sources, runs,
                        evalsets, s.registry, tmpl);
  write_cross_task_csv(out_path, matrix);
  std::printf("[cross-eval] sources=%zu targets=%zu matrix=%s\n",
              matrix.sources.size(), matrix.targets.size(), out_path.c_str());
  return kExitOk;
}

struct RunReportRow {
  std::string dataset;
  std::string model_tag;
  double base = 0.0;
  double final_acc = 0.0;
};

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_path, bool per_dataset) {
  if (run_dirs.empty()) throw ConfigError("report needs --run");

  std::vector<RunReportRow> rows;
  for (const std::string& dir : run_dirs) {
    const RunManifest manifest = load_manifest(dir);
    if (manifest.evaluations.empty()) {
      std::fprintf(stderr,
                   "warning: run %s has no evaluations, skipped\n",
                   dir.c_str());
      continue;
    }
    RunReportRow row;
    row.dataset = manifest.dataset_id;
    row.model_tag = manifest.cli_config.value("model_tag",
                                              manifest.backend_kind);
    bool has_base = false, has_final = false;
    const std::string final_tag =
        "after-iteration-" + std::to_string(manifest.iterations.size());
    for (const EvalSnapshot& snap : manifest.evaluations) {
      if (snap.tag == "base") {
        row.base = snap.accuracy;
        has_base = true;
      }
      if (snap.tag == final_tag) {
        row.final_acc = snap.accuracy;
        has_final = true;
      }
    }
    if (!has_base || !has_final) {
      std::fprintf(stderr,
                   "warning: run %s lacks base/final evaluations, skipped\n",
                   dir.c_str());
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ValidationError("no usable runs for the report");
  }

  // Pooled two-sided paired t-test (final vs base) is the default; the
  // per-dataset switch moves the test inside each dataset group.
  std::optional<double> pooled_p;
  if (!per_dataset && rows.size() >= 2) {
    std::vector<double> fin, base;
    for (const RunReportRow& row : rows) {
      fin.push_back(row.final_acc);
      base.push_back(row.base);
    }
    try {
      pooled_p = paired_ttest(fin, base).p;
    } catch (const DegenerateResultError& e) {
      std::fprintf(stderr, "warning: %s; p value omitted\n", e.what());
    }
  }

  std::map<std::string, std::vector<RunReportRow>> by_dataset;
  for (const RunReportRow& row : rows) by_dataset[row.dataset].push_back(row);

  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  std::string table = "| dataset | model | mean | sem | seeds | p_value |\n"
                      "|---|---|---|---|---|---|\n";
  for (const auto& [dataset, group] : by_dataset) {
    std::vector<double> fin, base;
    for (const RunReportRow& row : group) {
      fin.push_back(row.final_acc);
      base.push_back(row.base);
    }
    const AggregateResult aggregate = aggregate_values(fin);

    std::optional<double> p = pooled_p;
    if (per_dataset && group.size() >= 2) {
      try {
        p = paired_ttest(fin, base).p;
      } catch (const DegenerateResultError& e) {
        std::fprintf(stderr, "warning: %s (%s); p value omitted\n", e.what(),
                     dataset.c_str());
        p = std::nullopt;
      }
    }

    nlohmann::ordered_json entry;
    entry["model_tag"] = group.front().model_tag;
    entry["dataset"] = dataset;
    entry["mean"] = aggregate.mean;
    entry["sem"] = aggregate.sem;
    entry["seeds"] = aggregate.values;
    entry["repetitions"] = aggregate.repetitions;
    if (p) {
      entry["p_value"] = *p;
      entry["p_value_test"] = per_dataset
                                  ? "paired two-sided t-test (per dataset)"
                                  : "paired two-sided t-test (pooled)";
    }
    entries.push_back(std::move(entry));

    char line[256];
    std::snprintf(line, sizeof(line),
                  "| %s | %s | %.4f | %.4f | %zu | %s |\n", dataset.c_str(),
                  group.front().model_tag.c_str(), aggregate.mean,
                  aggregate.sem, aggregate.repetitions,
                  p ? std::to_string(*p).c_str() : "-");
    table += line;
  }

  const nlohmann::ordered_json doc =
      entries.size() == 1 ? entries.front() : entries;
  {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw StorageError("cannot write report: " + out_path);
    out << doc.dump(2) << "\n";
  }
  const std::string md_path =
      out_path.size() > 5 && out_path.ends_with(".json")
          ? out_path.substr(0, out_path.size() - 5) + ".md"
          : out_path + ".md";
  {
    std::ofstream out(md_path, std::ios::binary);
    if (!out) throw StorageError("cannot write report: " + md_path);
    out << table;
  }

  std::printf("[report] runs=%zu datasets=%zu report=%s table=%s\n",
              rows.size(), by_dataset.size(), out_path.c_str(),
              md_path.c_str());
  return kExitOk;
}

int classify_exit_code(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const IngestionError*>(&e) ||
      dynamic_cast<const LookupError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const LockError*>(&e)) {
    return kExitUser;
  }
  return kExitInternal;
}

const char* error_kind(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const IngestionError*>(&e)) return "ingestion";
  if (dynamic_cast<const LookupError*>(&e)) return "lookup";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const TransportError*>(&e)) return "transport";
  if (dynamic_cast<const LockError*>(&e)) return "lock";
  if (dynamic_cast<const StorageError*>(&e)) return "storage";
  if (dynamic_cast<const DegenerateResultError*>(&e)) return "degenerate";
  if (dynamic_cast<const UnmaskableClassError*>(&e)) return "unmaskable";
  return "internal";
}

void print_error(const char* kind, const std::string& message) {
  const nlohmann::ordered_json line = {{"error", kind}, {"message", message}};
  std::fprintf(stderr, "%s\n", line.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-training for entailment-based zero-shot classifiers"};
  app.require_subcommand(1);
  // Lets `zsst <subcommand> --config ...` resolve app-level options.
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")
      ->envname("ZSST_CONFIG");

  Overrides o;
  std::vector<std::string> run_dirs, eval_specs;
  std::string out_path;
  bool per_dataset = false;

  CLI::App* eval_cmd =
      app.add_subcommand("eval-zero-shot", "score a test set off the shelf");
  add_override_flags(eval_cmd, o);

  CLI::App* train_cmd =
      app.add_subcommand("self-train", "run the full self-training loop");
  add_override_flags(train_cmd, o);

  CLI::App* ablate_cmd = app.add_subcommand(
      "ablate-masking", "paired masked/unmasked runs over the seed list");
  add_override_flags(ablate_cmd, o);

  CLI::App* heuristic_cmd = app.add_subcommand(
      "heuristic-baseline", "embedding-only pseudo-labeling baseline");
  add_override_flags(heuristic_cmd, o);

  CLI::App* cross_cmd = app.add_subcommand(
      "cross-eval", "delta matrix of self-trained runs across test sets");
  add_override_flags(cross_cmd, o);
  cross_cmd->add_option("--run", run_dirs, "completed run directory")
      ->required();
  cross_cmd->add_option("--eval", eval_specs, "dataset_id=test_file pair")
      ->required();
  cross_cmd->add_option("--out", out_path, "output CSV path");

  CLI::App* report_cmd =
      app.add_subcommand("report", "aggregate completed runs into report.json");
  report_cmd->add_option("--run", run_dirs, "run directory")->required();
  report_cmd->add_option("--out", out_path, "output JSON path");
  report_cmd->add_flag("--per-dataset", per_dataset,
                       "t-test per dataset instead of pooled");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*report_cmd) {
      return cmd_report(run_dirs, out_path.empty() ? "report.json" : out_path,
                        per_dataset);
    }
    const AppConfig cfg = resolve_config(config_path, o);
    if (*eval_cmd) return cmd_eval_zero_shot(cfg);
    if (*train_cmd) return cmd_self_train(cfg);
    if (*ablate_cmd) return cmd_ablate_masking(cfg);
    if (*heuristic_cmd) return cmd_heuristic_baseline(cfg);
    if (*cross_cmd) {
      return cmd_cross_eval(cfg, run_dirs, eval_specs,
                            out_path.empty() ? "cross_task.csv" : out_path);
    }
    throw InternalError("no subcommand dispatched");
  } catch (const Error& e) {
    print_error(error_kind(e), e.what());
    return classify_exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    print_error("config", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitInternal;
  }
}
