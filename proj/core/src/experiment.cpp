#include "frofa/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "frofa/checkpoint.hpp"
#include "frofa/linear_probe.hpp"

namespace frofa {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw std::invalid_argument(std::string("missing ") + what + ": " + path.string());
}

nlohmann::json grid_point_json(const GridPoint& p) {
  return {{"batch_size", p.batch_size}, {"lr", p.lr}, {"steps", p.steps}, {"weight_decay", p.weight_decay}};
}

std::string summary_line(std::uint32_t shot, double mean, double se) {
  return "shot=" + std::to_string(shot) + " mean_top1=" + format_mean_stderr(mean, se);
}

}  // namespace

std::string format_mean_stderr(double mean, double stderr_value) {
  return fixed(mean, 3) + " ± " + fixed(stderr_value, 3);
}

void ExperimentOptions::validate() const {
  if (cache.empty()) throw std::invalid_argument("no cache given (--cache)");
  require_file(cache, "cache");
  if (val_cache.has_value() != test_cache.has_value()) {
    throw std::invalid_argument("val_cache and test_cache must be given together");
  }
  if (val_cache) require_file(*val_cache, "validation cache");
  if (test_cache) require_file(*test_cache, "test cache");
  if (shots.empty()) throw std::invalid_argument("shots list is empty");
  for (auto k : shots) {
    if (k < 1) throw std::invalid_argument("shots must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("seeds list is empty");
  if (grid != "full" && grid != "reduced") throw std::invalid_argument("grid must be full or reduced");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (pipeline) pipeline->validate();
}

nlohmann::json ExperimentOptions::echo(const std::string& command) const {
  nlohmann::json j{{"command", command},
                   {"cache", cache.filename().string()},
                   {"shots", shots},
                   {"seeds", seeds},
                   {"seed", seed}};
  if (val_cache) j["val_cache"] = val_cache->filename().string();
  if (test_cache) j["test_cache"] = test_cache->filename().string();
  if (!val_cache) j["holdout"] = {{"val_fraction", val_fraction}, {"test_fraction", test_fraction}};
  if (command == "probe") {
    j["probe_bias"] = probe_bias;
    return j;
  }
  j["pipeline"] = pipeline ? nlohmann::json(*pipeline) : nlohmann::json(nullptr);
  if (command == "sweep") {
    j["grid"] = grid;
    j["weight_decay_axis"] = weight_decay_axis;
  } else {
    j["config"] = grid_point_json(train_point);
  }
  j["warmup_steps"] = warmup_steps;
  j["clip_norm"] = clip_norm;
  j["eval_every"] = eval_every;
  return j;
}

std::vector<std::uint64_t> parse_int_list(const std::string& text) {
  auto parse_one = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("not a non-negative integer: '" + s + "' in '" + text + "'");
    }
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const auto lo = parse_one(item.substr(0, dots));
      const auto hi = parse_one(item.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("empty range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_one(item));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty integer list");
  return out;
}

std::optional<Pipeline> load_pipeline(const std::string& spec) {
  if (spec == "none" || spec.empty()) return std::nullopt;
  require_file(spec, "pipeline file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_bytes(spec));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid pipeline JSON in " + spec + ": " + e.what());
  }
  try {
    return j.get<Pipeline>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid pipeline JSON in " + spec + ": " + e.what());
  }
}

ExperimentOptions load_manifest(const fs::path& path) {
  require_file(path, "manifest");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid manifest JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw std::invalid_argument("manifest must be a JSON object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  ExperimentOptions o;
  try {
    if (j.contains("cache")) o.cache = resolve(j["cache"].get<std::string>());
    if (j.contains("val_cache")) o.val_cache = resolve(j["val_cache"].get<std::string>());
    if (j.contains("test_cache")) o.test_cache = resolve(j["test_cache"].get<std::string>());
    if (j.contains("pipeline")) {
      const auto& p = j["pipeline"];
      if (p.is_object()) {
        o.pipeline = p.get<Pipeline>();
      } else if (p.is_string() && p.get<std::string>() != "none") {
        o.pipeline = load_pipeline(resolve(p.get<std::string>()).string());
      }
    }
    if (j.contains("grid")) o.grid = j["grid"].get<std::string>();
    if (j.contains("weight_decay_axis")) o.weight_decay_axis = j["weight_decay_axis"].get<bool>();
    if (j.contains("shots")) o.shots = j["shots"].get<std::vector<std::uint32_t>>();
    if (j.contains("seeds")) o.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) o.out = resolve(j["out"].get<std::string>());
    if (j.contains("workers")) o.workers = j["workers"].get<std::size_t>();
    if (j.contains("batch_size")) o.train_point.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr")) o.train_point.lr = j["lr"].get<double>();
    if (j.contains("steps")) o.train_point.steps = j["steps"].get<std::size_t>();
    if (j.contains("weight_decay")) o.train_point.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("warmup_steps")) o.warmup_steps = j["warmup_steps"].get<std::size_t>();
    if (j.contains("eval_every")) o.eval_every = j["eval_every"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid manifest field: " + std::string(e.what()));
  }
  return o;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentOptions& options, const std::string& command) {
  std::string material = options.echo(command).dump();
  material += fnv1a_hex(read_bytes(options.cache));
  if (options.val_cache) material += fnv1a_hex(read_bytes(*options.val_cache));
  if (options.test_cache) material += fnv1a_hex(read_bytes(*options.test_cache));
  return fnv1a_hex(material);
}

SweepData load_experiment_data(const ExperimentOptions& options) {
  FeatureCache cache = read_cache(options.cache);
  cache.validate();
  if (options.val_cache) {
    FeatureCache val = read_cache(*options.val_cache);
    FeatureCache test = read_cache(*options.test_cache);
    val.validate();
    test.validate();
    return {std::move(cache), std::move(val), std::move(test)};
  }
  auto split = holdout_split(cache, options.val_fraction, options.test_fraction, options.seed);
  return {std::move(split.train), std::move(split.val), std::move(split.test)};
}

namespace {

CommandSummary run_grid(const ExperimentOptions& options, const std::string& command, const SweepGrid& grid,
                        bool write_checkpoints) {
  options.validate();
  const std::string hash = config_hash(options, command);
  const SweepData data = load_experiment_data(options);

  SweepOptions so;
  so.shots = options.shots;
  so.seeds = options.seeds;
  so.seed = options.seed;
  so.pipeline = options.pipeline;
  so.workers = options.workers;
  so.keep_params = write_checkpoints;
  so.base.warmup_steps = options.warmup_steps;
  so.base.clip_norm = options.clip_norm;
  so.base.eval_every = options.eval_every;
  const SweepResult result = run_sweep(grid, data, so);

  fs::create_directories(options.out);
  std::vector<bool> selected(result.records.size(), false);
  for (const auto& s : result.summaries) {
    for (const auto& r : s.selected) selected[r.record] = true;
  }

  std::string metrics, csv, timing;
  csv = "shot,seed,batch_size,lr,steps,weight_decay,pipeline_id,val_top1,test_top1,best_step,wall_s,config_hash\n";
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    nlohmann::json line{{"config_hash", hash},         {"command", command},
                        {"shot", r.shot},              {"seed", r.seed},
                        {"pipeline_id", r.pipeline_id}, {"val_top1", r.val_top1},
                        {"test_top1", r.test_top1},    {"best_step", r.best_step},
                        {"selected", static_cast<bool>(selected[i])}};
    line.update(grid_point_json(r.config));
    auto curve = nlohmann::json::array();
    for (const auto& e : r.evals) curve.push_back({e.step, e.val_top1});
    line["val_curve"] = std::move(curve);
    metrics += line.dump() + "\n";

    csv += std::to_string(r.shot) + "," + std::to_string(r.seed) + "," + std::to_string(r.config.batch_size) +
           "," + general(r.config.lr) + "," + std::to_string(r.config.steps) + "," +
           general(r.config.weight_decay) + "," + r.pipeline_id + "," + fixed(r.val_top1, 6) + "," +
           fixed(r.test_top1, 6) + "," + std::to_string(r.best_step) + "," +
           (options.record_timing ? fixed(r.wall_s, 3) : std::string()) + "," + hash + "\n";

    nlohmann::json t{{"config_hash", hash}, {"shot", r.shot}, {"seed", r.seed}, {"wall_s", r.wall_s}};
    t.update(grid_point_json(r.config));
    timing += t.dump() + "\n";

    if (write_checkpoints && r.params) {
      fs::create_directories(options.out / "checkpoints");
      Checkpoint ckpt = to_checkpoint(*r.params);
      ckpt.meta["config_hash"] = hash;
      ckpt.meta["shot"] = r.shot;
      ckpt.meta["seed"] = r.seed;
      write_checkpoint(ckpt, options.out / "checkpoints" /
                                 ("shot" + std::to_string(r.shot) + "_seed" + std::to_string(r.seed) + ".bin"));
    }
  }

  CommandSummary out{hash, {}};
  nlohmann::json summary{{"config_hash", hash},
                         {"command", command},
                         {"pipeline_id", options.pipeline ? options.pipeline->display_id() : "baseline"},
                         {"configs_per_replica", grid.size()},
                         {"options", options.echo(command)}};
  auto shots = nlohmann::json::array();
  for (const auto& s : result.summaries) {
    auto sel = nlohmann::json::array();
    for (const auto& r : s.selected) {
      const auto& rec = result.records[r.record];
      nlohmann::json e{{"seed", r.seed},
                       {"val_top1", rec.val_top1},
                       {"test_top1", rec.test_top1},
                       {"best_step", rec.best_step}};
      e.update(grid_point_json(rec.config));
      sel.push_back(std::move(e));
    }
    shots.push_back({{"shot", s.shot}, {"mean_top1", s.mean_top1}, {"stderr_top1", s.stderr_top1},
                     {"selected", std::move(sel)}});
    out.lines.push_back(summary_line(s.shot, s.mean_top1, s.stderr_top1));
  }
  summary["shots"] = std::move(shots);

  write_text(options.out / "metrics.jsonl", metrics);
  write_text(options.out / "configs.csv", csv);
  write_text(options.out / "summary.json", summary.dump(2) + "\n");
  write_text(options.out / "timing.jsonl", timing);
  return out;
}

}  // namespace

CommandSummary run_train_command(const ExperimentOptions& options) {
  const auto& p = options.train_point;
  SweepGrid grid{{p.batch_size}, {p.lr}, {p.steps}, {p.weight_decay}};
  return run_grid(options, "train", grid, true);
}

CommandSummary run_sweep_command(const ExperimentOptions& options) {
  return run_grid(options, "sweep", SweepGrid::named(options.grid, options.weight_decay_axis), false);
}

CommandSummary run_probe_command(const ExperimentOptions& options) {
  options.validate();
  const std::string hash = config_hash(options, "probe");
  const SweepData data = load_experiment_data(options);
  const std::size_t S = data.train_pool.num_classes();
  const Matrix X_val = feature_matrix(data.val);
  const Matrix X_test = feature_matrix(data.test);

  fs::create_directories(options.out / "checkpoints");
  std::string metrics;
  std::string csv = "shot,seed,lambda,val_top1,test_top1,train_top1,config_hash\n";
  CommandSummary out{hash, {}};
  auto shots = nlohmann::json::array();
  for (auto shot : options.shots) {
    std::vector<double> tests, trains;
    auto per_seed = nlohmann::json::array();
    for (auto seed : options.seeds) {
      const auto sample = sample_few_shot(data.train_pool, shot, seed);
      const FeatureCache train = data.train_pool.subset(sample.indices, "train");
      const Matrix X_train = feature_matrix(train);
      const LambdaSweep sweep =
          sweep_lambda(X_train, one_hot(train.labels, S), X_val, data.val.labels, options.probe_bias);
      const auto& best = sweep.best;
      double val_top1 = 0.0;
      for (const auto& c : sweep.candidates) {
        if (c.lambda == best.lambda) val_top1 = c.val_top1;
      }
      const double test_top1 = top1(predict(best, X_test), data.test.labels);
      const double train_top1 = top1(predict(best, X_train), train.labels);
      tests.push_back(test_top1);
      trains.push_back(train_top1);

      nlohmann::json line{{"config_hash", hash},   {"command", "probe"},        {"shot", shot},
                          {"seed", seed},          {"lambda", best.lambda},     {"val_top1", val_top1},
                          {"test_top1", test_top1}, {"train_top1", train_top1},
                          {"lambda_candidates", sweep.candidates.size()}};
      metrics += line.dump() + "\n";
      csv += std::to_string(shot) + "," + std::to_string(seed) + "," + general(best.lambda) + "," +
             fixed(val_top1, 6) + "," + fixed(test_top1, 6) + "," + fixed(train_top1, 6) + "," + hash + "\n";
      per_seed.push_back({{"seed", seed}, {"lambda", best.lambda}, {"test_top1", test_top1}});

      Checkpoint ckpt = to_checkpoint(best);
      ckpt.meta["config_hash"] = hash;
      write_checkpoint(ckpt, options.out / "checkpoints" /
                                 ("probe_shot" + std::to_string(shot) + "_seed" + std::to_string(seed) + ".bin"));
    }
    const auto [mean, se] = mean_and_stderr(tests);
    const auto [train_mean, train_se] = mean_and_stderr(trains);
    (void)train_se;
    shots.push_back({{"shot", shot},
                     {"mean_top1", mean},
                     {"stderr_top1", se},
                     {"train_top1", train_mean},
                     {"selected", std::move(per_seed)}});
    out.lines.push_back(summary_line(shot, mean, se) + " train_top1=" + fixed(train_mean, 3));
  }
  nlohmann::json summary{{"config_hash", hash},
                         {"command", "probe"},
                         {"pipeline_id", "linear_probe"},
                         {"lambda_grid_size", lambda_grid().size()},
                         {"options", options.echo("probe")},
                         {"shots", std::move(shots)}};
  write_text(options.out / "metrics.jsonl", metrics);
  write_text(options.out / "configs.csv", csv);
  write_text(options.out / "summary.json", summary.dump(2) + "\n");
  return out;
}

double run_eval_command(const fs::path& checkpoint, const fs::path& cache_path) {
  require_file(checkpoint, "checkpoint");
  require_file(cache_path, "cache");
  const FeatureCache cache = read_cache(cache_path);
  cache.validate();
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const std::string model = ckpt.meta.value("model", "");
  if (model == "map_head") return evaluate_top1(map_head_from_checkpoint(ckpt), cache);
  if (model == "ridge") return evaluate_top1(ridge_from_checkpoint(ckpt), cache);
  throw std::runtime_error("unknown checkpoint model '" + model + "'");
}

}  // namespace frofa
