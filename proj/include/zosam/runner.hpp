#ifndef ZOSAM_RUNNER_HPP
#define ZOSAM_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zosam/config.hpp"
#include "zosam/diagnostics.hpp"

namespace zosam {

struct RunnerOptions {
  std::string out_dir = "runs";
  std::size_t jobs = 1;
  std::optional<std::vector<std::uint64_t>> seed_override;
  bool force_slices = false;
};

struct RunArtifacts {
  std::string metrics_path;
  std::vector<std::string> slice_paths;
  std::string final_state_path;
  std::string config_echo;  // serialized config the artifacts were produced from
  bool all_ok = true;
};

/// Execute one run per (variant, seed) of the config, possibly across worker
/// threads, and write the metrics, final-state and slice artifacts. Output
/// bytes depend only on the config (never on scheduling).
RunArtifacts run_experiment(const ExperimentConfig& cfg, const RunnerOptions& opts = {});

/// Fixed metrics schema; a leading '#'-prefixed block echoes the config.
const std::vector<std::string>& metrics_header();

struct MethodSummary {
  std::string method;
  double alpha = 0.0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::optional<double> epochs_to_threshold_median;
  double threshold = 0.0;
  double final_acc_mean = 0.0;
  double final_acc_std = 0.0;
  double forward_total = 0.0;   // per-run total, averaged over runs
  double backward_total = 0.0;  // per-run total, averaged over runs
  double grad_variance_final_half = 0.0;
};

struct RunConvergence {
  std::string method;
  double alpha = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> epoch;
  double final_acc = 0.0;
  double grad_variance_final_half = 0.0;
  bool ok = true;
};

struct ComparisonReport {
  std::vector<MethodSummary> methods;
  std::vector<RunConvergence> runs;

  std::string render() const;
};

/// Aggregate one or more metrics files into a per-method table. All files
/// must carry the exact metrics schema; a mismatch raises std::runtime_error
/// naming the offending column.
ComparisonReport compare_runs(const std::vector<std::string>& metrics_files);

}  // namespace zosam

#endif  // ZOSAM_RUNNER_HPP
