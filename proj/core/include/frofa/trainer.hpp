#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/feature_store.hpp"
#include "frofa/linear_probe.hpp"
#include "frofa/map_head.hpp"
#include "frofa/protocols.hpp"

namespace frofa {

struct TrainConfig {
  std::size_t batch_size = 32;
  double base_lr = 0.01;
  std::size_t total_steps = 1000;
  double weight_decay = 0.0;
  double momentum = 0.9;
  std::size_t warmup_steps = 500;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  std::optional<Pipeline> pipeline;
  std::size_t eval_every = 0;  // 0 selects max(100, total_steps / 20)
  std::size_t heads = 0;       // 0 selects default_head_count(C)

  void validate() const;
  [[nodiscard]] std::size_t effective_eval_every() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

// Linear warm-up to base_lr, then half-cosine decay to zero at total_steps.
double lr_at(std::size_t step, const TrainConfig& config);

// Scales `grad` in place so its global L2 norm is at most max_norm and
// returns the norm before scaling. max_norm <= 0 leaves grad untouched.
double clip_global_norm(std::vector<float>& grad, double max_norm);

struct OptimizerState {
  MapHeadParams params;
  MapHeadParams momentum;
};

// One batch entry after augmentation. Entries that were left untouched by
// the pipeline and share a source index are merged, with `weight` counting
// their multiplicity.
struct BatchEntry {
  std::size_t source = 0;
  FeatureTensor features;
  std::vector<float> labels;
  float weight = 1.0f;
};

// Position `step` of the epoch-shuffled stream over `train_size` examples.
class EpochSampler {
public:
  EpochSampler(std::size_t train_size, std::uint64_t seed);
  [[nodiscard]] std::vector<std::size_t> batch_indices(std::size_t step, std::size_t batch_size);

private:
  const std::vector<std::size_t>& order(std::size_t epoch);
  std::size_t size_;
  RngKey key_;
  std::size_t cached_epoch_ = static_cast<std::size_t>(-1);
  std::vector<std::size_t> cached_order_;
};

// Draws batch `step`, applies the per-example pipeline with keys derived
// from (seed, step, position), then batch-level mixup if configured.
std::vector<BatchEntry> assemble_batch(const FeatureCache& train_set, const TrainConfig& config,
                                       std::size_t step, EpochSampler& sampler);

// Clipped momentum SGD with decoupled weight decay at lr_at(step). Returns
// the batch loss; throws std::runtime_error on a non-finite loss.
double train_step(OptimizerState& state, std::span<const BatchEntry> batch,
                  const TrainConfig& config, std::size_t step);

struct EvalPoint {
  std::size_t step = 0;
  double val_top1 = 0.0;
};

struct TrainMetrics {
  std::vector<EvalPoint> evals;
  std::size_t best_step = 0;
  double best_val_top1 = 0.0;
  double final_val_top1 = 0.0;
  double final_loss = 0.0;
  double wall_s = 0.0;
};

struct TrainResult {
  MapHeadParams best_params;
  TrainMetrics metrics;
};

// Trains from init_map_head(C, S, h, seed), evaluating every eval_every
// steps and at the final step; returns the parameters of the best
// evaluation (earliest on ties).
TrainResult train(const TrainConfig& config, const FeatureCache& train_set,
                  const FeatureCache& val_set);

double evaluate_top1(const MapHeadParams& params, const FeatureCache& eval_set);
double evaluate_top1(const RidgeSolution& solution, const FeatureCache& eval_set);

}  // namespace frofa
