#include "frofa/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace frofa {

SweepGrid SweepGrid::full(bool decay_axis) {
  SweepGrid g{{32, 64, 128, 256, 512}, {0.01, 0.03, 0.06, 0.1}, {1000, 2000, 4000, 8000, 16000}, {0.0}};
  if (decay_axis) g.weight_decays = {0.01, 0.001, 0.0001, 0.0};
  return g;
}

SweepGrid SweepGrid::reduced() { return {{32, 512}, {0.01, 0.03}, {1000, 16000}, {0.0}}; }

SweepGrid SweepGrid::named(const std::string& name, bool decay_axis) {
  if (name == "full") return full(decay_axis);
  if (name == "reduced") {
    SweepGrid g = reduced();
    if (decay_axis) g.weight_decays = {0.01, 0.001, 0.0001, 0.0};
    return g;
  }
  throw std::invalid_argument("unknown grid '" + name + "' (expected full or reduced)");
}

std::vector<GridPoint> SweepGrid::configs() const {
  std::vector<GridPoint> out;
  for (auto b : batch_sizes) {
    for (auto lr : learning_rates) {
      for (auto s : step_counts) {
        for (auto wd : weight_decays) out.push_back({b, lr, s, wd});
      }
    }
  }
  return out;
}

std::size_t SweepGrid::size() const {
  return batch_sizes.size() * learning_rates.size() * step_counts.size() * weight_decays.size();
}

std::uint64_t replica_train_seed(std::uint64_t root_seed, std::uint32_t shot, std::uint64_t replica) {
  return RngKey(root_seed).fold("train").fold({shot, replica}).value();
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(values.size());
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

SweepResult run_sweep(const SweepGrid& grid, const SweepData& data, const SweepOptions& options) {
  const auto configs = grid.configs();
  if (configs.empty()) throw std::invalid_argument("empty sweep grid");
  if (options.shots.empty() || options.seeds.empty()) throw std::invalid_argument("sweep needs shots and seeds");
  if (options.pipeline) options.pipeline->validate();
  const std::string pipeline_id = options.pipeline ? options.pipeline->display_id() : "baseline";

  struct Replica {
    std::uint32_t shot;
    std::uint64_t seed;
    FeatureCache train;
  };
  std::vector<Replica> replicas;
  for (auto shot : options.shots) {
    for (auto seed : options.seeds) {
      const auto sample = sample_few_shot(data.train_pool, shot, seed);
      replicas.push_back({shot, seed, data.train_pool.subset(sample.indices, "train")});
    }
  }

  SweepResult result;
  result.records.resize(replicas.size() * configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= result.records.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Replica& rep = replicas[job / configs.size()];
        const GridPoint& point = configs[job % configs.size()];
        TrainConfig cfg = options.base;
        cfg.batch_size = point.batch_size;
        cfg.base_lr = point.lr;
        cfg.total_steps = point.steps;
        cfg.weight_decay = point.weight_decay;
        cfg.seed = replica_train_seed(options.seed, rep.shot, rep.seed);
        cfg.pipeline = options.pipeline;
        const TrainResult trained = train(cfg, rep.train, data.val);
        RunRecord& rec = result.records[job];
        rec.shot = rep.shot;
        rec.seed = rep.seed;
        rec.config = point;
        rec.pipeline_id = pipeline_id;
        rec.val_top1 = trained.metrics.best_val_top1;
        rec.test_top1 = evaluate_top1(trained.best_params, data.test);
        rec.best_step = trained.metrics.best_step;
        rec.wall_s = trained.metrics.wall_s;
        rec.evals = trained.metrics.evals;
        if (options.keep_params) rec.params = trained.best_params;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, result.records.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t r = 0;
  for (auto shot : options.shots) {
    ShotSummary summary;
    summary.shot = shot;
    std::vector<double> tests;
    for (auto seed : options.seeds) {
      const std::size_t first = r * configs.size();
      std::size_t best = first;
      for (std::size_t i = first + 1; i < first + configs.size(); ++i) {
        if (result.records[i].val_top1 > result.records[best].val_top1) best = i;
      }
      summary.selected.push_back({seed, best});
      tests.push_back(result.records[best].test_top1);
      ++r;
    }
    std::tie(summary.mean_top1, summary.stderr_top1) = mean_and_stderr(tests);
    result.summaries.push_back(std::move(summary));
  }
  return result;
}

}  // namespace frofa
