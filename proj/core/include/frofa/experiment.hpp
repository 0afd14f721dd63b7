#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/protocols.hpp"
#include "frofa/sweep.hpp"

namespace frofa {

// Everything a train / sweep / probe run depends on. Fields that cannot
// change results (out, workers, record_timing) are left out of the echo
// and the config hash.
struct ExperimentOptions {
  std::filesystem::path cache;
  // When both are set, `cache` is the k-shot pool and these are used as is;
  // otherwise `cache` is split per class into pool / val / test.
  std::optional<std::filesystem::path> val_cache;
  std::optional<std::filesystem::path> test_cache;
  double val_fraction = 0.25;
  double test_fraction = 0.25;

  std::vector<std::uint32_t> shots{1, 5, 10, 25};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t seed = 0;

  std::optional<Pipeline> pipeline;
  std::string grid = "full";
  bool weight_decay_axis = false;

  // Single configuration used by `train`.
  GridPoint train_point{32, 0.01, 1000, 0.0};
  std::size_t warmup_steps = 500;
  double clip_norm = 1.0;
  std::size_t eval_every = 0;

  bool probe_bias = true;

  std::filesystem::path out = ".";
  std::size_t workers = 1;
  bool record_timing = false;

  // Throws std::invalid_argument for unusable values or missing input files.
  void validate() const;
  [[nodiscard]] nlohmann::json echo(const std::string& command) const;
};

// Manifest JSON keys: cache, val_cache, test_cache, pipeline (path, "none"
// or inline object), grid, weight_decay_axis, shots, seeds, seed, out,
// workers, batch_size, lr, steps, weight_decay, warmup_steps, eval_every.
// Relative paths resolve against the manifest's directory.
ExperimentOptions load_manifest(const std::filesystem::path& path);

// "none" gives no pipeline; anything else is read as a pipeline JSON file.
std::optional<Pipeline> load_pipeline(const std::string& spec);

// Parses "0..4", "0,2,5" or "3" into a list of non-negative integers.
std::vector<std::uint64_t> parse_int_list(const std::string& text);

// 16 hex digits of a 64-bit FNV-1a hash.
std::string fnv1a_hex(std::string_view bytes);
// Hash of the run echo together with the contents of every input cache.
std::string config_hash(const ExperimentOptions& options, const std::string& command);

SweepData load_experiment_data(const ExperimentOptions& options);

struct CommandSummary {
  std::string config_hash;
  std::vector<std::string> lines;  // printed to stdout
};

// Each command writes metrics.jsonl, configs.csv and summary.json into
// options.out (plus timing.jsonl and checkpoints/) and returns the summary
// lines "shot=K mean_top1=X.XXX ± S.E.".
CommandSummary run_train_command(const ExperimentOptions& options);
CommandSummary run_sweep_command(const ExperimentOptions& options);
CommandSummary run_probe_command(const ExperimentOptions& options);

// Top-1 of a saved map-head or ridge checkpoint on every example of a cache.
double run_eval_command(const std::filesystem::path& checkpoint, const std::filesystem::path& cache);

// "X.XXX ± Y.YYY"
std::string format_mean_stderr(double mean, double stderr_value);

}  // namespace frofa
