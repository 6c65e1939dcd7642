// Experiment runner for the sparse-training optimizer library: executes
// seeded (variant x seed) sweeps from plain-text configs and emits
// deterministic CSV metrics, final states and loss-surface slices.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zosam/config.hpp"
#include "zosam/diagnostics.hpp"
#include "zosam/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ZOSAM_OUT_DIR"); env && *env) return env;
  return "runs";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& raw) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw zosam::ConfigError("--seed-override: empty seed");
    seeds.push_back(std::stoull(cur));
    cur.clear();
  };
  for (char c : raw) {
    if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return seeds;
}

int do_run(const std::string& config_path, const std::string& out_dir, std::size_t jobs,
           const std::string& seed_override, bool force_slices) {
  zosam::RunnerOptions opts;
  opts.out_dir = resolve_out_dir(out_dir);
  opts.jobs = jobs;
  opts.force_slices = force_slices;
  if (!seed_override.empty()) opts.seed_override = parse_seed_list(seed_override);

  const zosam::ExperimentConfig cfg = zosam::parse_config_file(config_path);
  const zosam::RunArtifacts artifacts = zosam::run_experiment(cfg, opts);

  std::cout << "metrics: " << artifacts.metrics_path << '\n';
  std::cout << "final state: " << artifacts.final_state_path << '\n';
  for (const std::string& p : artifacts.slice_paths) std::cout << "slice: " << p << '\n';
  if (!artifacts.all_ok) {
    std::cerr << "one or more runs failed; see the status column\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

int do_compare(const std::vector<std::string>& files) {
  const zosam::ComparisonReport report = zosam::compare_runs(files);
  std::cout << report.render();
  return kExitOk;
}

int do_selftest() {
  using namespace zosam;
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << what << '\n';
    if (!ok) ++failures;
  };

  Batch dummy;
  dummy.rows = 1;
  dummy.cols = 1;
  dummy.inputs = {0.0};
  dummy.targets = {0};

  {
    const auto quad = QuadraticObjective::identity(2);
    check(quad.eval_loss({3.0, 4.0}, dummy) == 12.5, "quadratic loss closed form");
  }
  {
    const Mask m = random_mask(10, 3, 7);
    check(m.popcount() == 3, "random mask population count");
  }
  {
    const Vec eps = sam_perturb({3.0, 4.0}, 0.1);
    check(std::abs(eps[0] - 0.06) < 1e-15 && std::abs(eps[1] - 0.08) < 1e-15,
          "perturbation normalization");
  }
  {
    const auto quad = QuadraticObjective::identity(4);
    StepCounters counters;
    RgeConfig rge;
    rge.m = 3;
    rge.delta = 1e-3;
    const auto est = rge_estimate(quad, {1.0, -1.0, 0.5, 2.0}, Mask::all_ones(4), dummy, rge, 1,
                                  &counters);
    check(counters.forward_evals == 6 && counters.backward_passes == 0 &&
              est.function_evals == 6,
          "estimator evaluation accounting");
  }
  {
    TrainerState state;
    state.theta = {1.0};
    state.mask = Mask::all_ones(1);
    OptimizerConfig cfg;
    cfg.variant = OptimizerVariant::Sam;
    cfg.eta = {LrScheduleKind::Constant, 0.1, 0};
    cfg.rho = 0.1;
    cfg.lambda = 0.0;
    const auto quad = QuadraticObjective::identity(1);
    const TrainerState next = sam_step(state, quad, dummy, cfg);
    check(std::abs(next.theta[0] - 0.89) < 1e-15, "two-pass step on the 1-d quadratic");
  }
  return failures == 0 ? kExitOk : kExitRunFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-training optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seed_override;
  std::size_t jobs = 1;
  std::vector<std::string> compare_files;

  CLI::App* run_cmd = app.add_subcommand("run", "execute the runs of a config");
  run_cmd->add_option("config", config_path, "plain-text key=value config")->required();
  run_cmd->add_option("--out-dir", out_dir, "output directory (default: ZOSAM_OUT_DIR or runs)");
  run_cmd->add_option("--jobs", jobs, "worker threads for independent runs");
  run_cmd->add_option("--seed-override", seed_override, "comma-separated seed list");

  CLI::App* compare_cmd = app.add_subcommand("compare", "aggregate metrics files");
  compare_cmd->add_option("files", compare_files, "metrics.csv files")->required();

  CLI::App* slice_cmd = app.add_subcommand("slice", "run and emit loss-surface slices");
  slice_cmd->add_option("config", config_path, "plain-text key=value config")->required();
  slice_cmd->add_option("--out-dir", out_dir, "output directory");
  slice_cmd->add_option("--jobs", jobs, "worker threads for independent runs");
  slice_cmd->add_option("--seed-override", seed_override, "comma-separated seed list");

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "quick internal sanity checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run_cmd->parsed()) {
      return do_run(config_path, out_dir, jobs, seed_override, /*force_slices=*/false);
    }
    if (slice_cmd->parsed()) {
      return do_run(config_path, out_dir, jobs, seed_override, /*force_slices=*/true);
    }
    if (compare_cmd->parsed()) {
      return do_compare(compare_files);
    }
    if (selftest_cmd->parsed()) {
      return do_selftest();
    }
  } catch (const zosam::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
