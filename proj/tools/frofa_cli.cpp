// frofa: few-shot training on cached frozen features with feature-space augmentation.
//
//   frofa cache synth --classes 10 --per-class 30 --n 16 --c 8 --seed 0 -o demo.ffac
//   frofa cache info demo.ffac
//   frofa sweep --cache demo.ffac --grid reduced --shots 1,5 --pipeline none --out runs/base
//   frofa report --metrics runs --baseline baseline --out runs/report
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "frofa/experiment.hpp"
#include "frofa/feature_store.hpp"
#include "frofa/report.hpp"

namespace {

using namespace frofa;

// Raw flag values; applied on top of the manifest only when given.
struct ExperimentFlags {
  std::string manifest, cache, val_cache, test_cache, shots, seeds, pipeline, grid, decay_axis, out;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  bool record_timing = false;
  std::size_t batch_size = 32, steps = 1000, warmup_steps = 500, eval_every = 0;
  double lr = 0.01, weight_decay = 0.0;
  bool no_bias = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool sweep_flags, bool train_flags) {
  cmd->add_option("--manifest", f.manifest, "JSON manifest; flags override its fields");
  cmd->add_option("--cache", f.cache, "Feature cache (.ffac); split into pool/val/test unless --val-cache and --test-cache are given");
  cmd->add_option("--val-cache", f.val_cache, "Validation cache");
  cmd->add_option("--test-cache", f.test_cache, "Test cache");
  cmd->add_option("--shots", f.shots, "Shots per class, e.g. 1,5,10,25");
  cmd->add_option("--seeds", f.seeds, "Few-shot replicas, e.g. 0..4");
  cmd->add_option("--seed", f.seed, "Root seed for splits and training");
  cmd->add_option("--out", f.out, "Output directory (default $FROFA_OUT or .)");
  if (sweep_flags || train_flags) {
    cmd->add_option("--pipeline", f.pipeline, "Pipeline JSON file or 'none'");
    cmd->add_option("--warmup-steps", f.warmup_steps, "Linear warm-up steps");
    cmd->add_option("--eval-every", f.eval_every, "Validation cadence in steps (0: max(100, steps/20))");
  }
  if (sweep_flags) {
    cmd->add_option("--grid", f.grid, "full (100 configs) or reduced (8)")->check(CLI::IsMember({"full", "reduced"}));
    cmd->add_option("--weight-decay-axis", f.decay_axis, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--workers", f.workers, "Parallel training runs")->check(CLI::PositiveNumber);
    cmd->add_flag("--record-timing", f.record_timing, "Fill the wall_s column of configs.csv");
  }
  if (train_flags) {
    cmd->add_option("--batch-size", f.batch_size, "Batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", f.lr, "Base learning rate");
    cmd->add_option("--steps", f.steps, "Training steps");
    cmd->add_option("--weight-decay", f.weight_decay, "Decoupled weight decay");
  }
}

bool given(const CLI::App* cmd, const std::string& name) {
  const auto* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

ExperimentOptions resolve_options(const CLI::App* cmd, const ExperimentFlags& f) {
  ExperimentOptions o = f.manifest.empty() ? ExperimentOptions{} : load_manifest(f.manifest);
  const bool manifest_out = !f.manifest.empty() && o.out != ".";
  if (given(cmd, "--cache")) o.cache = f.cache;
  if (given(cmd, "--val-cache")) o.val_cache = f.val_cache;
  if (given(cmd, "--test-cache")) o.test_cache = f.test_cache;
  if (given(cmd, "--shots")) {
    o.shots.clear();
    for (auto k : parse_int_list(f.shots)) o.shots.push_back(static_cast<std::uint32_t>(k));
  }
  if (given(cmd, "--seeds")) o.seeds = parse_int_list(f.seeds);
  if (given(cmd, "--seed")) o.seed = f.seed;
  if (given(cmd, "--pipeline")) o.pipeline = load_pipeline(f.pipeline);
  if (given(cmd, "--grid")) o.grid = f.grid;
  if (given(cmd, "--weight-decay-axis")) o.weight_decay_axis = f.decay_axis == "on";
  if (given(cmd, "--workers")) o.workers = f.workers;
  if (given(cmd, "--warmup-steps")) o.warmup_steps = f.warmup_steps;
  if (given(cmd, "--eval-every")) o.eval_every = f.eval_every;
  if (given(cmd, "--batch-size")) o.train_point.batch_size = f.batch_size;
  if (given(cmd, "--lr")) o.train_point.lr = f.lr;
  if (given(cmd, "--steps")) o.train_point.steps = f.steps;
  if (given(cmd, "--weight-decay")) o.train_point.weight_decay = f.weight_decay;
  o.record_timing = f.record_timing;
  o.probe_bias = !f.no_bias;
  if (given(cmd, "--out")) {
    o.out = f.out;
  } else if (!manifest_out) {
    const char* env = std::getenv("FROFA_OUT");
    o.out = env && *env ? env : ".";
  }
  return o;
}

void print_summary(const CommandSummary& s) {
  for (const auto& line : s.lines) std::cout << line << '\n';
  std::cout << "config_hash=" << s.config_hash << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot training on frozen features with feature-space augmentation", "frofa"};
  app.require_subcommand(1);

  auto* cache = app.add_subcommand("cache", "Create, import and inspect feature caches");
  cache->require_subcommand(1);

  frofa::SyntheticSpec synth;
  std::string synth_out;
  auto* synth_cmd = cache->add_subcommand("synth", "Write a class-conditional Gaussian cache");
  synth_cmd->add_option("--classes", synth.num_classes, "Classes S")->check(CLI::Range(2u, 1000000u));
  synth_cmd->add_option("--per-class", synth.per_class, "Examples per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--n", synth.tokens, "Tokens N (1 gives a pooled cache)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--c", synth.channels, "Channels C")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--cluster-scale", synth.cluster_scale, "Spread of the class means");
  synth_cmd->add_option("--noise-scale", synth.noise_scale, "Per-token noise");
  synth_cmd->add_option("-o,--output", synth_out, "Output .ffac path")->required();

  std::string import_features, import_labels, import_layout = "token_grid", import_out = "features.ffac";
  auto* import_cmd = cache->add_subcommand("import", "Convert .npy features and labels into a cache");
  import_cmd->add_option("--features", import_features, "(E,N,C) or (E,C) float32 .npy")->required();
  import_cmd->add_option("--labels", import_labels, "(E,) int32/int64 .npy")->required();
  import_cmd->add_option("--layout", import_layout, "token_grid or pooled")
      ->check(CLI::IsMember({"token_grid", "pooled"}));
  import_cmd->add_option("-o,--output", import_out, "Output .ffac path");

  std::string info_path;
  auto* info_cmd = cache->add_subcommand("info", "Print a cache manifest");
  info_cmd->add_option("path", info_path, "Cache file")->required();

  ExperimentFlags train_flags, sweep_flags, probe_flags;
  auto* train_cmd = app.add_subcommand("train", "Train the attention-pooling head at one configuration");
  add_experiment_flags(train_cmd, train_flags, false, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep with validation-based selection");
  add_experiment_flags(sweep_cmd, sweep_flags, true, false);
  auto* probe_cmd = app.add_subcommand("probe", "Closed-form ridge probe on pooled features");
  add_experiment_flags(probe_cmd, probe_flags, false, false);
  probe_cmd->add_flag("--no-bias", probe_flags.no_bias, "Fit without an intercept column");

  std::string eval_ckpt, eval_cache;
  auto* eval_cmd = app.add_subcommand("eval", "Top-1 of a saved checkpoint on a cache");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint .bin (index alongside)")->required();
  eval_cmd->add_option("--cache", eval_cache, "Cache to evaluate")->required();

  std::vector<std::string> report_dirs;
  std::string report_baseline = "baseline", report_out;
  auto* report_cmd = app.add_subcommand("report", "Gains versus a baseline run, as CSV and SVG");
  report_cmd->add_option("--metrics", report_dirs, "Run directories or their parent")->required();
  report_cmd->add_option("--baseline", report_baseline, "pipeline_id of the baseline run");
  report_cmd->add_option("--out", report_out, "Output directory (default $FROFA_OUT or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth_cmd) {
      const FeatureCache c = generate_synthetic(synth);
      write_cache(c, synth_out);
      std::cout << "wrote " << synth_out << " E=" << c.manifest.num_examples << " N=" << c.manifest.tokens
                << " C=" << c.manifest.channels << " S=" << c.manifest.num_classes << '\n';
    } else if (*import_cmd) {
      const FeatureCache c = import_npy(import_features, import_labels, layout_from_string(import_layout));
      write_cache(c, import_out);
      std::cout << "wrote " << import_out << " E=" << c.manifest.num_examples << " N=" << c.manifest.tokens
                << " C=" << c.manifest.channels << " S=" << c.manifest.num_classes << '\n';
    } else if (*info_cmd) {
      const FeatureCache c = read_cache(info_path);
      const auto& m = c.manifest;
      std::cout << "E=" << m.num_examples << " N=" << m.tokens << " C=" << m.channels << " S=" << m.num_classes
                << '\n'
                << "layout=" << to_string(m.layout) << " version=" << m.version << " split=" << m.split_name
                << '\n';
      if (!m.source.empty()) std::cout << "source=" << m.source << '\n';
    } else if (*train_cmd) {
      print_summary(run_train_command(resolve_options(train_cmd, train_flags)));
    } else if (*sweep_cmd) {
      print_summary(run_sweep_command(resolve_options(sweep_cmd, sweep_flags)));
    } else if (*probe_cmd) {
      print_summary(run_probe_command(resolve_options(probe_cmd, probe_flags)));
    } else if (*eval_cmd) {
      const double acc = run_eval_command(eval_ckpt, eval_cache);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", acc);
      std::cout << "top1=" << buf << '\n';
    } else if (*report_cmd) {
      std::vector<std::filesystem::path> roots(report_dirs.begin(), report_dirs.end());
      std::vector<RunSummary> runs;
      for (const auto& dir : find_runs(roots)) runs.push_back(read_run_summary(dir));
      const auto rows = compute_gains(runs, report_baseline);
      std::filesystem::path out = report_out;
      if (out.empty()) {
        const char* env = std::getenv("FROFA_OUT");
        out = env && *env ? env : ".";
      }
      for (const auto& file : write_report(rows, out)) std::cout << "wrote " << file.string() << '\n';
      for (const auto& r : rows) {
        std::cout << "shot=" << r.shot << ' ' << r.pipeline_id << " gain=" << format_gain(r.gain) << '\n';
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
