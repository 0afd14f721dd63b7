#include "frofa/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace frofa {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (total_steps <= warmup_steps) {
    throw std::invalid_argument("total_steps (" + std::to_string(total_steps) +
                                ") must exceed warmup_steps (" + std::to_string(warmup_steps) + ")");
  }
  if (!std::isfinite(base_lr) || base_lr < 0.0) throw std::invalid_argument("base_lr must be finite and >= 0");
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
    throw std::invalid_argument("weight_decay must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (pipeline) pipeline->validate();
}

std::size_t TrainConfig::effective_eval_every() const {
  if (eval_every > 0) return eval_every;
  return std::max<std::size_t>(100, total_steps / 20);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},     {"lr", c.base_lr},
                     {"steps", c.total_steps},         {"weight_decay", c.weight_decay},
                     {"momentum", c.momentum},         {"warmup_steps", c.warmup_steps},
                     {"clip_norm", c.clip_norm},       {"seed", c.seed},
                     {"eval_every", c.effective_eval_every()}, {"heads", c.heads}};
  j["pipeline"] = c.pipeline ? nlohmann::json(*c.pipeline) : nlohmann::json(nullptr);
}

double lr_at(std::size_t step, const TrainConfig& config) {
  if (step < config.warmup_steps) {
    return config.base_lr * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  }
  const double progress = static_cast<double>(step - config.warmup_steps) /
                          static_cast<double>(config.total_steps - config.warmup_steps);
  return 0.5 * config.base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_global_norm(std::vector<float>& grad, double max_norm) {
  double sq = 0.0;
  for (float g : grad) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / norm);
    for (auto& g : grad) g *= scale;
  }
  return norm;
}

EpochSampler::EpochSampler(std::size_t train_size, std::uint64_t seed)
    : size_(train_size), key_(RngKey(seed).fold("epoch")) {
  if (train_size == 0) throw std::invalid_argument("empty training set");
}

const std::vector<std::size_t>& EpochSampler::order(std::size_t epoch) {
  if (epoch != cached_epoch_) {
    Rng rng(key_.fold(static_cast<std::uint64_t>(epoch)));
    cached_order_ = rng.permutation(size_);
    cached_epoch_ = epoch;
  }
  return cached_order_;
}

std::vector<std::size_t> EpochSampler::batch_indices(std::size_t step, std::size_t batch_size) {
  std::vector<std::size_t> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t pos = step * batch_size + i;
    out[i] = order(pos / size_)[pos % size_];
  }
  return out;
}

std::vector<BatchEntry> assemble_batch(const FeatureCache& train_set, const TrainConfig& config,
                                       std::size_t step, EpochSampler& sampler) {
  const auto indices = sampler.batch_indices(step, config.batch_size);
  const std::size_t S = train_set.num_classes();
  auto one_hot_label = [&](std::size_t idx) {
    std::vector<float> y(S, 0.0f);
    y[train_set.labels[idx]] = 1.0f;
    return y;
  };

  const Pipeline* pipeline = config.pipeline ? &*config.pipeline : nullptr;
  const auto mixup = pipeline ? pipeline->batch_mixup() : std::nullopt;
  const RngKey step_key = RngKey(config.seed).fold("augment").fold(static_cast<std::uint64_t>(step));

  std::vector<BatchEntry> entries;
  entries.reserve(indices.size());
  std::unordered_map<std::size_t, std::size_t> merged;  // source -> entry for untouched examples
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    const FeatureTensor& x = train_set.features[src];
    if (pipeline) {
      FrofaResult r = apply_pipeline(*pipeline, x, step_key.fold(static_cast<std::uint64_t>(i)));
      if (!r.unchanged || mixup) {
        entries.push_back({src, std::move(r.features), one_hot_label(src), 1.0f});
        continue;
      }
    }
    if (auto it = merged.find(src); it != merged.end()) {
      entries[it->second].weight += 1.0f;
      continue;
    }
    merged.emplace(src, entries.size());
    entries.push_back({src, x, one_hot_label(src), 1.0f});
  }

  if (mixup) {
    std::vector<FeatureTensor> feats;
    std::vector<std::vector<float>> labels;
    for (auto& e : entries) {
      feats.push_back(std::move(e.features));
      labels.push_back(std::move(e.labels));
    }
    mixup_batch(feats, labels, *mixup, RngKey(config.seed).fold("mixup").fold(static_cast<std::uint64_t>(step)));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      entries[i].features = std::move(feats[i]);
      entries[i].labels = std::move(labels[i]);
    }
  }
  return entries;
}

double train_step(OptimizerState& state, std::span<const BatchEntry> batch, const TrainConfig& config,
                  std::size_t step) {
  std::vector<WeightedExample> examples;
  examples.reserve(batch.size());
  for (const auto& e : batch) examples.push_back({&e.features, e.labels.data(), e.weight});

  MapHeadParams grad = state.params.zeros_like();
  const double loss = loss_and_gradient(state.params, examples, &grad);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("non-finite loss " + std::to_string(loss) + " at step " + std::to_string(step) +
                             " (lr=" + std::to_string(lr_at(step, config)) + ")");
  }
  clip_global_norm(grad.flat(), config.clip_norm);

  const auto lr = static_cast<float>(lr_at(step, config));
  const auto mu = static_cast<float>(config.momentum);
  const auto decay = static_cast<float>(lr * config.weight_decay);
  auto& w = state.params.flat();
  auto& m = state.momentum.flat();
  const auto& g = grad.flat();
  for (const auto& s : state.params.slices()) {
    const std::size_t end = s.offset + s.size();
    for (std::size_t i = s.offset; i < end; ++i) {
      m[i] = mu * m[i] + g[i];
      float update = lr * m[i];
      if (s.decayed) update += decay * w[i];
      w[i] -= update;
    }
  }
  return loss;
}

namespace {

void check_compatible(const FeatureCache& train_set, const FeatureCache& other, const char* what) {
  if (other.size() == 0) throw std::invalid_argument(std::string(what) + " set is empty");
  if (other.manifest.channels != train_set.manifest.channels) {
    throw std::invalid_argument(std::string("channel mismatch between train and ") + what + " sets");
  }
  if (other.num_classes() != train_set.num_classes()) {
    throw std::invalid_argument(std::string("class count mismatch between train and ") + what + " sets");
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const FeatureCache& train_set, const FeatureCache& val_set) {
  config.validate();
  if (train_set.size() == 0) throw std::invalid_argument("training set is empty");
  check_compatible(train_set, val_set, "validation");
  if (config.pipeline && train_set.manifest.layout == Layout::pooled) {
    throw std::invalid_argument("augmentation pipelines need a token_grid cache, got pooled features");
  }

  const auto start = std::chrono::steady_clock::now();
  const std::size_t C = train_set.manifest.channels;
  const std::size_t S = train_set.num_classes();
  const std::size_t heads = config.heads ? config.heads : default_head_count(C);
  OptimizerState state{init_map_head(C, S, heads, config.seed), {}};
  state.momentum = state.params.zeros_like();

  EpochSampler sampler(train_set.size(), config.seed);
  const std::size_t every = config.effective_eval_every();
  TrainResult result;
  result.best_params = state.params;
  result.metrics.best_val_top1 = -1.0;
  auto record = [&](std::size_t done) {
    const double acc = evaluate_top1(state.params, val_set);
    result.metrics.evals.push_back({done, acc});
    if (acc > result.metrics.best_val_top1) {
      result.metrics.best_val_top1 = acc;
      result.metrics.best_step = done;
      result.best_params = state.params;
    }
    result.metrics.final_val_top1 = acc;
  };

  for (std::size_t t = 0; t < config.total_steps; ++t) {
    const auto batch = assemble_batch(train_set, config, t, sampler);
    result.metrics.final_loss = train_step(state, batch, config, t);
    const std::size_t done = t + 1;
    if (done % every == 0) record(done);
    if (done == config.total_steps) record(done);
  }
  result.metrics.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double evaluate_top1(const MapHeadParams& params, const FeatureCache& eval_set) {
  if (eval_set.size() == 0) throw std::invalid_argument("evaluation set is empty");
  const auto outputs = forward(params, eval_set.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    hits += argmax(outputs[i].logits) == eval_set.labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

double evaluate_top1(const RidgeSolution& solution, const FeatureCache& eval_set) {
  if (eval_set.size() == 0) throw std::invalid_argument("evaluation set is empty");
  return top1(predict(solution, feature_matrix(eval_set)), eval_set.labels);
}

}  // namespace frofa
