#include "zsst/core.hpp"

#include <cmath>
#include <set>

#include "zsst/errors.hpp"
#include "zsst/text.hpp"

namespace zsst {

ClassSet::ClassSet(std::string dataset_id, std::vector<std::string> names)
    : dataset_id_(std::move(dataset_id)) {
  if (names.size() < 2) {
    throw ConfigError("class set '" + dataset_id_ +
                      "' needs at least 2 class names, got " +
                      std::to_string(names.size()));
  }
  names_.reserve(names.size());
  for (const std::string& raw : names) {
    std::string name = to_lower(trim(raw));
    if (name.empty()) {
      throw ConfigError("class set '" + dataset_id_ +
                        "' contains an empty class name");
    }
    if (index_.count(name) > 0) {
      throw ConfigError("class set '" + dataset_id_ +
                        "' contains duplicate class name '" + name + "'");
    }
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
  }
}

std::optional<std::size_t> ClassSet::index_of(std::string_view name) const {
  auto it = index_.find(to_lower(trim(name)));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

HypothesisTemplate::HypothesisTemplate(std::string pattern)
    : pattern_(std::move(pattern)) {
  std::size_t first = pattern_.find("[]");
  if (first == std::string::npos) {
    throw ConfigError("hypothesis template '" + pattern_ +
                      "' has no [] slot");
  }
  if (pattern_.find("[]", first + 2) != std::string::npos) {
    throw ConfigError("hypothesis template '" + pattern_ +
                      "' has more than one [] slot");
  }
  slot_pos_ = first;
}

std::string HypothesisTemplate::render(std::string_view class_name) const {
  if (class_name.empty()) {
    throw ValidationError("cannot render hypothesis for an empty class name");
  }
  std::string out = pattern_;
  out.replace(slot_pos_, 2, class_name);
  return out;
}

std::optional<std::string> HypothesisTemplate::extract_class(
    std::string_view hypothesis) const {
  const std::string pre = prefix();
  const std::string suf = suffix();
  if (hypothesis.size() <= pre.size() + suf.size()) return std::nullopt;
  if (hypothesis.substr(0, pre.size()) != pre) return std::nullopt;
  if (hypothesis.substr(hypothesis.size() - suf.size()) != suf) {
    return std::nullopt;
  }
  return std::string(hypothesis.substr(
      pre.size(), hypothesis.size() - pre.size() - suf.size()));
}

std::string render_hypothesis(const HypothesisTemplate& tmpl,
                              std::string_view class_name) {
  return tmpl.render(class_name);
}

Optimizer parse_optimizer(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "adamw") return Optimizer::kAdamW;
  if (v == "sgd") return Optimizer::kSgd;
  throw ConfigError("unknown optimizer '" + std::string(s) +
                    "' (expected adamw or sgd)");
}

Loss parse_loss(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "cross_entropy") return Loss::kCrossEntropy;
  throw ConfigError("unknown loss '" + std::string(s) +
                    "' (expected cross_entropy)");
}

std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::kAdamW:
      return "adamw";
    case Optimizer::kSgd:
      return "sgd";
  }
  return "adamw";
}

std::string to_string(Loss l) {
  (void)l;
  return "cross_entropy";
}

void FineTuneSpec::validate() const {
  if (epochs < 1) {
    throw ConfigError("fine_tune.epochs must be >= 1, got " +
                      std::to_string(epochs));
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("fine_tune.learning_rate must be > 0");
  }
  if (batch_size < 1) {
    throw ConfigError("fine_tune.batch_size must be >= 1, got " +
                      std::to_string(batch_size));
  }
}

ContrastStrategy parse_strategy(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "random") return ContrastStrategy::kRandom;
  if (v == "closest") return ContrastStrategy::kClosest;
  if (v == "furthest") return ContrastStrategy::kFurthest;
  if (v == "all") return ContrastStrategy::kAll;
  throw ConfigError("unknown contrast strategy '" + std::string(s) +
                    "' (expected random, closest, furthest or all)");
}

std::string to_string(ContrastStrategy s) {
  switch (s) {
    case ContrastStrategy::kRandom:
      return "random";
    case ContrastStrategy::kClosest:
      return "closest";
    case ContrastStrategy::kFurthest:
      return "furthest";
    case ContrastStrategy::kAll:
      return "all";
  }
  return "random";
}

void SelfTrainConfig::validate() const {
  if (!(per_class_fraction > 0.0) || per_class_fraction > 1.0) {
    throw ConfigError("per_class_fraction must be in (0, 1]");
  }
  if (iterations < 1) {
    throw ConfigError("iterations must be >= 1, got " +
                      std::to_string(iterations));
  }
  fine_tune.validate();
}

std::size_t resolve_n(double per_class_fraction, std::size_t corpus_size) {
  if (corpus_size < 1) {
    throw ValidationError("resolve_n requires corpus_size >= 1");
  }
  if (!(per_class_fraction > 0.0) || per_class_fraction > 1.0) {
    throw ConfigError("per_class_fraction must be in (0, 1]");
  }
  const double raw = per_class_fraction * static_cast<double>(corpus_size);
  // 0.01 * 10000 is 100 + 2 ulp in binary; back off before taking the
  // ceiling so exact products round the way the arithmetic intends.
  const double n = std::ceil(raw - 1e-9);
  if (n < 1.0) return 1;
  return static_cast<std::size_t>(n);
}

std::size_t resolve_n(const SelfTrainConfig& config, std::size_t corpus_size) {
  return resolve_n(config.per_class_fraction, corpus_size);
}

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

SelfTrainConfig self_train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("self_train config must be a JSON object");
  }
  reject_unknown_keys(j,
                      {"per_class_fraction", "iterations", "contrast_strategy",
                       "masking_enabled", "seed", "fine_tune"},
                      "self_train config");
  SelfTrainConfig c;
  if (j.contains("per_class_fraction")) {
    c.per_class_fraction = j.at("per_class_fraction").get<double>();
  }
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<int>();
  if (j.contains("contrast_strategy")) {
    c.contrast_strategy =
        parse_strategy(j.at("contrast_strategy").get<std::string>());
  }
  if (j.contains("masking_enabled")) {
    c.masking_enabled = j.at("masking_enabled").get<bool>();
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("fine_tune")) {
    const nlohmann::json& f = j.at("fine_tune");
    reject_unknown_keys(
        f, {"epochs", "learning_rate", "batch_size", "optimizer", "loss"},
        "fine_tune config");
    if (f.contains("epochs")) c.fine_tune.epochs = f.at("epochs").get<int>();
    if (f.contains("learning_rate")) {
      c.fine_tune.learning_rate = f.at("learning_rate").get<double>();
    }
    if (f.contains("batch_size")) {
      c.fine_tune.batch_size = f.at("batch_size").get<int>();
    }
    if (f.contains("optimizer")) {
      c.fine_tune.optimizer =
          parse_optimizer(f.at("optimizer").get<std::string>());
    }
    if (f.contains("loss")) {
      c.fine_tune.loss = parse_loss(f.at("loss").get<std::string>());
    }
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const FineTuneSpec& spec) {
  nlohmann::ordered_json f;
  f["epochs"] = spec.epochs;
  f["learning_rate"] = spec.learning_rate;
  f["batch_size"] = spec.batch_size;
  f["optimizer"] = to_string(spec.optimizer);
  f["loss"] = to_string(spec.loss);
  return f;
}

nlohmann::ordered_json to_json(const SelfTrainConfig& config) {
  nlohmann::ordered_json j;
  j["per_class_fraction"] = config.per_class_fraction;
  j["iterations"] = config.iterations;
  j["contrast_strategy"] = to_string(config.contrast_strategy);
  j["masking_enabled"] = config.masking_enabled;
  j["seed"] = config.seed;
  j["fine_tune"] = to_json(config.fine_tune);
  return j;
}

}  // namespace zsst
