#ifndef ZOSAM_CONFIG_HPP
#define ZOSAM_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zosam/mask.hpp"
#include "zosam/objective.hpp"
#include "zosam/optimizer.hpp"

namespace zosam {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class SchedulerKind { None, Set, Rigl };
enum class QuadSpectrum { Identity, Linear };
enum class DatasetKind { None, GaussianBlobs, TwoArcs };

/// Fully validated description of one experiment; every run of a config is
/// reproducible from the serialized form.
struct ExperimentConfig {
  // objective
  std::string objective;  // quadratic | rosenbrock | logreg | mlp
  std::size_t quad_dim = 10;
  QuadSpectrum quad_spectrum = QuadSpectrum::Identity;
  std::size_t rosen_dim = 2;
  std::vector<std::size_t> mlp_hidden = {32, 16};
  Activation activation = Activation::Tanh;

  // dataset
  DatasetKind dataset = DatasetKind::None;
  std::size_t n = 2000;
  std::size_t in_dim = 2;
  std::size_t n_classes = 2;
  std::size_t batch_size = 32;

  // sparsity
  double alpha = 0.9;
  MaskInit mask_init = MaskInit::Random;
  SchedulerKind scheduler = SchedulerKind::None;
  double zeta = 0.3;
  std::uint64_t scheduler_interval = 0;  // 0 -> once per epoch

  // optimizer
  std::vector<OptimizerVariant> variants = {OptimizerVariant::Sgd};
  double eta = 0.1;
  LrScheduleKind eta_schedule = LrScheduleKind::Cosine;
  double rho = 0.05;
  double lambda = 5e-4;
  std::size_t rge_m = 16;
  double rge_delta = 0.0;  // 0 -> scale-aware automatic step
  bool rge_restrict = false;

  // run
  std::uint64_t epochs = 0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  // diagnostics
  std::size_t variance_window = 20;
  std::uint64_t variance_every = 10;
  double acc_threshold = 0.9;
  bool slice_enable = false;
  double slice_r = 1.0;
  std::size_t slice_grid = 41;
  std::size_t slice_dirs = 1;
  std::uint64_t slice_seed = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parse a key=value document ('#' starts a comment). Unknown keys, repeated
/// keys, missing required keys (objective, epochs) and out-of-range values
/// all raise ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig parse_config_file(const std::string& path);

/// Canonical key=value form; parse(serialize(cfg)) == cfg.
std::string serialize_config(const ExperimentConfig& cfg);

/// Instantiate the configured objective. For data-driven objectives the
/// model input/output widths come from in_dim and n_classes.
std::unique_ptr<Objective> make_objective(const ExperimentConfig& cfg);

/// Optimizer settings for one variant of the config.
OptimizerConfig make_optimizer_config(const ExperimentConfig& cfg, OptimizerVariant variant);

std::optional<GrowPruneConfig> make_scheduler_config(const ExperimentConfig& cfg);

}  // namespace zosam

#endif  // ZOSAM_CONFIG_HPP
