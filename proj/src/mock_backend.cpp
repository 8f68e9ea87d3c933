#include "zsst/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"
#include "zsst/rng.hpp"
#include "zsst/text.hpp"

namespace zsst {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kWeightDecay = 0.01;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void append_double(std::string& buf, double v) {
  char tmp[32];
  std::snprintf(tmp, sizeof(tmp), "%.17g|", v);
  buf += tmp;
}

}  // namespace

void MockConfig::validate() const {
  if (!embeddings) throw ConfigError("mock backend needs an embedding store");
  if (!std::isfinite(scale)) throw ConfigError("mock scale must be finite");
  if (unk_token.empty()) throw ConfigError("unk token must not be empty");
  for (const auto& [name, value] : initial_bias) {
    if (name.empty()) throw ConfigError("initial bias has an empty class key");
    if (!std::isfinite(value)) {
      throw ConfigError("initial bias for '" + name + "' must be finite");
    }
  }
}

MockBackend::MockBackend(MockConfig config)
    : config_(std::move(config)), template_(config_.template_pattern) {
  config_.validate();

  auto base = std::make_shared<State>();
  base->scale = config_.scale;
  for (const auto& [name, value] : config_.initial_bias) {
    base->bias[to_lower(trim(name))] = value;
  }

  base_handle_.kind = "mock";
  base_handle_.id = state_digest(*base, config_.embeddings->digest());
  base_handle_.state_ref = "builtin:base";
  cache_.emplace(base_handle_.id, std::move(base));
}

std::string MockBackend::state_digest(const State& state,
                                      const std::string& parent_id) {
  std::string buf = parent_id + "|";
  std::vector<std::string> keys;
  keys.reserve(state.bias.size());
  for (const auto& [k, _] : state.bias) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (const std::string& k : keys) {
    buf += k;
    buf += '=';
    append_double(buf, state.bias.at(k));
  }
  buf += "scale=";
  append_double(buf, state.scale);
  return digest_hex(buf);
}

std::shared_ptr<const MockBackend::State> MockBackend::load_checkpoint(
    const std::filesystem::path& path) const {
  std::ifstream in(path);
  if (!in) {
    throw StorageError("cannot open mock checkpoint: " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StorageError("corrupt mock checkpoint " + path.string() + ": " +
                       e.what());
  }
  if (doc.value("kind", "") != "mock") {
    throw StorageError("checkpoint " + path.string() + " is not a mock state");
  }
  auto state = std::make_shared<State>();
  state->scale = doc.at("scale").get<double>();
  for (const auto& [key, value] : doc.at("bias").items()) {
    state->bias[key] = value.get<double>();
  }
  return state;
}

std::shared_ptr<const MockBackend::State> MockBackend::resolve_state(
    const ModelHandle& handle) const {
  if (handle.kind != "mock") {
    throw ValidationError("handle kind '" + handle.kind +
                          "' is not usable with the mock backend");
  }
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(handle.id);
    if (it != cache_.end()) return it->second;
  }
  if (handle.state_ref.rfind("memory:", 0) == 0 ||
      handle.state_ref == "builtin:base") {
    throw LookupError("mock state '" + handle.id +
                      "' is not cached and has no checkpoint on disk");
  }
  auto state = load_checkpoint(handle.state_ref);
  std::lock_guard<std::mutex> lock(cache_mutex_);
  return cache_.emplace(handle.id, std::move(state)).first->second;
}

std::vector<float> MockBackend::premise_mean(std::string_view premise,
                                             bool* empty) const {
  const EmbeddingStore& store = *config_.embeddings;
  std::vector<float> mean(store.dim(), 0.0f);
  std::size_t count = 0;
  for (const std::string& token : tokenize_lower(premise)) {
    const std::vector<float>* vec = store.find(token);
    if (!vec) continue;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*vec)[i];
    ++count;
  }
  *empty = (count == 0);
  if (count > 0) {
    const float inv = 1.0f / static_cast<float>(count);
    for (float& x : mean) x *= inv;
  }
  return mean;
}

std::vector<float> MockBackend::class_vector(
    const std::string& class_key) const {
  const EmbeddingStore& store = *config_.embeddings;
  std::vector<const std::vector<float>*> parts;
  for (const std::string& unigram : tokenize_lower(class_key)) {
    if (store.is_stopword(unigram)) continue;
    if (const std::vector<float>* v = store.find(unigram)) parts.push_back(v);
  }
  std::vector<float> mean(store.dim(), 0.0f);
  if (parts.empty()) return mean;  // OOV class scores neutrally
  for (const std::vector<float>* v : parts) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
  }
  const float inv = 1.0f / static_cast<float>(parts.size());
  for (float& x : mean) x *= inv;
  return mean;
}

double MockBackend::score_one(const State& state,
                              std::span<const float> premise_mean,
                              bool premise_empty,
                              const std::string& class_key) const {
  double w = 0.0;
  if (auto it = state.bias.find(class_key); it != state.bias.end()) {
    w = it->second;
  }
  double cos = 0.0;
  if (!premise_empty) {
    std::vector<float> cv = class_vector(class_key);
    cos = cosine(premise_mean, cv);
  }
  return sigmoid(w + state.scale * cos);
}

std::vector<double> MockBackend::score_entailment(
    const ModelHandle& handle, std::string_view premise,
    std::span<const std::string> hypotheses) const {
  auto state = resolve_state(handle);
  bool premise_empty = false;
  std::vector<float> mean = premise_mean(premise, &premise_empty);

  std::vector<double> out;
  out.reserve(hypotheses.size());
  for (const std::string& hypothesis : hypotheses) {
    std::optional<std::string> cls = template_.extract_class(hypothesis);
    if (!cls) {
      throw ValidationError("hypothesis '" + hypothesis +
                            "' does not match the mock template '" +
                            template_.pattern() + "'");
    }
    out.push_back(score_one(*state, mean, premise_empty,
                            to_lower(trim(*cls))));
  }
  return out;
}

ModelHandle MockBackend::fine_tune(const ModelHandle& base,
                                   std::span<const NliTrainingPair> pairs,
                                   const FineTuneSpec& spec,
                                   std::uint64_t seed,
                                   const std::filesystem::path& checkpoint_dir) {
  spec.validate();
  if (spec.loss != Loss::kCrossEntropy) {
    throw ConfigError("mock backend only implements cross-entropy loss");
  }
  if (pairs.empty()) {
    throw ValidationError("fine_tune called with no training pairs");
  }

  auto parent = resolve_state(base);
  State state = *parent;

  // The cosine feature of each pair is constant across training, so it is
  // computed once up front.
  struct Item {
    std::string class_key;
    double cos = 0.0;
    double target = 0.0;
  };
  std::vector<Item> items;
  items.reserve(pairs.size());
  for (const NliTrainingPair& pair : pairs) {
    Item item;
    std::optional<std::string> cls = template_.extract_class(pair.hypothesis);
    if (!cls) {
      throw ValidationError("training hypothesis '" + pair.hypothesis +
                            "' does not match the mock template '" +
                            template_.pattern() + "'");
    }
    item.class_key = to_lower(trim(*cls));
    bool premise_empty = false;
    std::vector<float> mean = premise_mean(pair.premise, &premise_empty);
    if (!premise_empty) {
      item.cos = cosine(mean, class_vector(item.class_key));
    }
    item.target = pair.label == NliLabel::kEntailment ? 1.0 : 0.0;
    state.bias.emplace(item.class_key, 0.0);
    items.push_back(std::move(item));
  }

  std::unordered_map<std::string, double> m_bias, v_bias;
  for (const auto& [k, _] : state.bias) {
    m_bias[k] = 0.0;
    v_bias[k] = 0.0;
  }
  double m_scale = 0.0, v_scale = 0.0;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Rng rng(seed);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(spec.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);

      std::unordered_map<std::string, double> g_bias;
      double g_scale = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const Item& item = items[order[k]];
        const double z =
            state.bias.at(item.class_key) + state.scale * item.cos;
        const double residual = sigmoid(z) - item.target;
        g_bias[item.class_key] += residual * inv_batch;
        g_scale += residual * item.cos * inv_batch;
      }

      ++step;
      auto adamw = [&](double& param, double& m, double& v, double grad) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad * grad;
        const double m_hat =
            m / (1.0 - std::pow(kAdamBeta1, static_cast<double>(step)));
        const double v_hat =
            v / (1.0 - std::pow(kAdamBeta2, static_cast<double>(step)));
        param -= spec.learning_rate *
                 (m_hat / (std::sqrt(v_hat) + kAdamEps) + kWeightDecay * param);
      };
      auto sgd = [&](double& param, double grad) {
        param -= spec.learning_rate * grad;
      };

      // Parameters update in class-key sorted order so the arithmetic is
      // identical run to run.
      std::vector<std::string> touched;
      touched.reserve(g_bias.size());
      for (const auto& [k, _] : g_bias) touched.push_back(k);
      std::sort(touched.begin(), touched.end());
      for (const std::string& key : touched) {
        if (spec.optimizer == Optimizer::kAdamW) {
          adamw(state.bias.at(key), m_bias.at(key), v_bias.at(key),
                g_bias.at(key));
        } else {
          sgd(state.bias.at(key), g_bias.at(key));
        }
      }
      if (config_.train_scale) {
        if (spec.optimizer == Optimizer::kAdamW) {
          adamw(state.scale, m_scale, v_scale, g_scale);
        } else {
          sgd(state.scale, g_scale);
        }
      }
    }
  }

  ModelHandle handle;
  handle.kind = "mock";
  handle.id = state_digest(state, base.id);
  handle.lineage = base.lineage;
  handle.lineage.push_back(base.id);

  if (checkpoint_dir.empty()) {
    handle.state_ref = "memory:" + handle.id;
  } else {
    std::error_code ec;
    std::filesystem::create_directories(checkpoint_dir, ec);
    if (ec) {
      throw StorageError("cannot create checkpoint directory " +
                         checkpoint_dir.string() + ": " + ec.message());
    }
    nlohmann::ordered_json doc;
    doc["kind"] = "mock";
    doc["parent"] = base.id;
    doc["scale"] = state.scale;
    nlohmann::ordered_json bias = nlohmann::ordered_json::object();
    std::vector<std::string> keys;
    for (const auto& [k, _] : state.bias) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const std::string& k : keys) bias[k] = state.bias.at(k);
    doc["bias"] = std::move(bias);

    const std::filesystem::path path = checkpoint_dir / "state.json";
    std::ofstream out(path);
    if (!out) {
      throw StorageError("cannot write mock checkpoint: " + path.string());
    }
    out << doc.dump(2) << "\n";
    out.flush();
    if (!out) {
      throw StorageError("failed writing mock checkpoint: " + path.string());
    }
    handle.state_ref = path.string();
  }

  std::lock_guard<std::mutex> lock(cache_mutex_);
  cache_.emplace(handle.id, std::make_shared<State>(std::move(state)));
  return handle;
}

double MockBackend::bias_of(const ModelHandle& handle,
                            const std::string& class_name) const {
  auto state = resolve_state(handle);
  auto it = state->bias.find(to_lower(trim(class_name)));
  return it == state->bias.end() ? 0.0 : it->second;
}

double MockBackend::scale_of(const ModelHandle& handle) const {
  return resolve_state(handle)->scale;
}

}  // namespace zsst
