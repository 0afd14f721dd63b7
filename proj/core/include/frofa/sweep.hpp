#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/feature_store.hpp"
#include "frofa/protocols.hpp"
#include "frofa/trainer.hpp"

namespace frofa {

struct GridPoint {
  std::size_t batch_size = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  double weight_decay = 0.0;
};

struct SweepGrid {
  std::vector<std::size_t> batch_sizes;
  std::vector<double> learning_rates;
  std::vector<std::size_t> step_counts;
  std::vector<double> weight_decays;

  // 5 x 4 x 5 (x 4 weight decays when decay_axis is set).
  static SweepGrid full(bool decay_axis = false);
  // {32, 512} x {0.01, 0.03} x {1000, 16000}.
  static SweepGrid reduced();
  static SweepGrid named(const std::string& name, bool decay_axis = false);

  // Cartesian product in (batch, lr, steps, decay) order.
  [[nodiscard]] std::vector<GridPoint> configs() const;
  [[nodiscard]] std::size_t size() const;
};

struct SweepData {
  FeatureCache train_pool;  // k-shot sets are sampled from here
  FeatureCache val;
  FeatureCache test;
};

struct SweepOptions {
  std::vector<std::uint32_t> shots{1, 5, 10, 25};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t seed = 0;  // root of every training key
  std::optional<Pipeline> pipeline;
  std::size_t workers = 1;
  // Keep the early-stopped parameters of every run in its record.
  bool keep_params = false;
  // Template for the non-grid fields of TrainConfig.
  TrainConfig base;
};

struct RunRecord {
  std::uint32_t shot = 0;
  std::uint64_t seed = 0;
  GridPoint config;
  std::string pipeline_id;
  double val_top1 = 0.0;
  double test_top1 = 0.0;
  std::size_t best_step = 0;
  double wall_s = 0.0;
  std::vector<EvalPoint> evals;
  std::optional<MapHeadParams> params;
};

struct ReplicaSelection {
  std::uint64_t seed = 0;
  std::size_t record = 0;  // index into SweepResult::records
};

struct ShotSummary {
  std::uint32_t shot = 0;
  std::vector<ReplicaSelection> selected;
  double mean_top1 = 0.0;
  double stderr_top1 = 0.0;
};

struct SweepResult {
  std::vector<RunRecord> records;  // ordered by (shot, seed, config)
  std::vector<ShotSummary> summaries;
};

// Seed of the training run for one (shot, replica): shared by every grid
// config so that configs and pipelines see the same data order.
std::uint64_t replica_train_seed(std::uint64_t root_seed, std::uint32_t shot, std::uint64_t replica);

// Trains every grid config on every (shot, replica), picks the config with
// the best validation top-1 per replica (first in grid order on ties), and
// summarizes the selected test top-1 by mean and standard error. Results do
// not depend on `workers`.
SweepResult run_sweep(const SweepGrid& grid, const SweepData& data, const SweepOptions& options);

// Sample mean and standard error of the mean (0 for fewer than 2 values).
std::pair<double, double> mean_and_stderr(const std::vector<double>& values);

}  // namespace frofa
