#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace frofa {

// Per-shot mean top-1 of one run, read from its summary.json.
struct RunSummary {
  std::string pipeline_id;
  std::string config_hash;
  std::vector<std::pair<std::uint32_t, double>> shot_means;
};

RunSummary read_run_summary(const std::filesystem::path& run_dir);

// Run directories under `roots`: a root holding summary.json is a run,
// otherwise its immediate subdirectories that hold one are. Sorted by path.
std::vector<std::filesystem::path> find_runs(const std::vector<std::filesystem::path>& roots);

struct GainRow {
  std::uint32_t shot = 0;
  std::string pipeline_id;
  double baseline_top1 = 0.0;
  double top1 = 0.0;
  double gain = 0.0;
};

// One row per (non-baseline run, shot the baseline also has). Throws
// std::invalid_argument when no run carries `baseline_id`.
std::vector<GainRow> compute_gains(const std::vector<RunSummary>& runs, const std::string& baseline_id);

// "+0.061", "-0.012"; anything that rounds to zero prints "0.000".
std::string format_gain(double gain);

// Writes gains.csv and one gains_shot<K>.svg bar chart per shot into out_dir.
// Returns the written files.
std::vector<std::filesystem::path> write_report(const std::vector<GainRow>& rows,
                                                const std::filesystem::path& out_dir);

}  // namespace frofa
