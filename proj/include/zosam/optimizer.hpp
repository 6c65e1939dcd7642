#ifndef ZOSAM_OPTIMIZER_HPP
#define ZOSAM_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zosam/common.hpp"
#include "zosam/estimators.hpp"
#include "zosam/mask.hpp"
#include "zosam/objective.hpp"

namespace zosam {

enum class OptimizerVariant { Sgd, Sam, ZoSam };

std::string variant_name(OptimizerVariant v);
std::optional<OptimizerVariant> variant_from_name(const std::string& name);

enum class LrScheduleKind { Constant, Cosine };

/// Per-step learning rate. Cosine decays from `base` toward zero over
/// `total_steps`; a zero total is stamped by the trainer at run start.
struct LrSchedule {
  LrScheduleKind kind = LrScheduleKind::Cosine;
  double base = 0.1;
  std::uint64_t total_steps = 0;

  double at(std::uint64_t t) const;
};

struct OptimizerConfig {
  OptimizerVariant variant = OptimizerVariant::Sgd;
  LrSchedule eta;
  double rho = 0.05;           // perturbation radius, >= 0
  double lambda = 5e-4;        // weight decay coefficient, >= 0
  RgeConfig rge;               // ZoSam only
  bool rge_delta_auto = true;  // resolve delta each step from the iterate scale
};

struct TrainerState {
  Vec theta;
  Mask mask;
  std::uint64_t t = 0;  // completed steps
  StepCounters counters;
  std::uint64_t rng_seed = 0;
};

/// rho * g / ||g||; the zero vector when ||g|| < 1e-12.
Vec sam_perturb(const Vec& grad, double rho);

/// One update of the plain masked objective:
///   theta' = (theta - eta_t * (grad(L(theta*M)) + lambda*theta)) * M.
/// Costs one backward pass (and its forward).
TrainerState sgd_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                      const OptimizerConfig& cfg);

/// Perturb along the exact gradient direction, then update with the gradient
/// taken at the perturbed point. Costs two backward passes. With rho == 0 the
/// perturbation stage is skipped and the step reduces to sgd_step exactly.
TrainerState sam_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                      const OptimizerConfig& cfg);

/// Perturbation direction from a zero-order estimate, update from the exact
/// gradient at the perturbed point:
///   1. theta <- theta * M
///   2. ghat  <- rge_estimate at theta (2m forward evaluations)
///   3. eps   <- rho * ghat / ||ghat||
///   4. ttil  <- (theta + eps) * M
///   5. g     <- grad L(ttil)   (the single backward pass)
///   6. theta'<- (theta - eta_t * (g + lambda*theta)) * M
/// The per-step probe seed derives from (rng_seed, t).
TrainerState zosam_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                        const OptimizerConfig& cfg);

/// Dispatch on cfg.variant.
TrainerState optimizer_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                            const OptimizerConfig& cfg);

// ---------------------------------------------------------------------------
// Training driver

enum class MaskInit { Random, Magnitude, Saliency };

std::string mask_init_name(MaskInit m);
std::optional<MaskInit> mask_init_from_name(const std::string& name);

struct StepRecord {
  std::uint64_t step = 0;  // 1-indexed
  double loss = 0.0;       // batch loss at the masked iterate, before the update
  double accuracy = 0.0;   // batch accuracy (NaN for label-free objectives)
  double grad_norm = 0.0;  // norm of the iterate gradient on this batch
  std::uint64_t grad_hash = 0;
  StepCounters counters;  // cumulative, after the step
  std::uint64_t mask_checksum = 0;
};

struct VariancePoint {
  std::uint64_t step = 0;
  double value = 0.0;
};

/// Windowed gradient-variance evaluations collected during a run.
struct VarianceTrace {
  std::size_t window = 20;
  std::vector<VariancePoint> points;
};

struct EpochRecord {
  std::uint64_t epoch = 0;  // 1-indexed
  std::uint64_t step = 0;   // global step at epoch end
  double train_loss = 0.0;  // mean of the epoch's step losses
  double train_acc = 0.0;
  double eval_acc = 0.0;       // NaN without an eval split
  double grad_variance = 0.0;  // mean of the epoch's variance evaluations, NaN if none
  StepCounters counters;
  double sparsity_actual = 0.0;
  std::uint64_t mask_checksum = 0;
};

struct TrainingTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  VarianceTrace variance;
  StepCounters overhead;  // mask machinery (saliency init, dense grow gradients)
};

struct TrainResult {
  TrainingTrace trace;
  TrainerState state;
};

struct DiagnosticsOptions {
  std::size_t variance_window = 20;
  std::uint64_t variance_every = 10;
};

using StepObserver = std::function<void(const TrainerState&)>;

/// Run `epochs` passes over train_data.batches with per-step mask
/// enforcement, optional prune-grow scheduling, and trace collection.
/// Deterministic for a fixed seed. An interval of zero in `scheduler` means
/// once per epoch. Throws NumericOverflow if any loss turns non-finite.
TrainResult train(const Objective& obj, const Dataset& train_data, const SparsitySpec& sparsity,
                  MaskInit mask_init, const std::optional<GrowPruneConfig>& scheduler,
                  OptimizerConfig opt_cfg, std::uint64_t epochs, std::uint64_t seed,
                  const Dataset* eval_data = nullptr, const DiagnosticsOptions& diag = {},
                  const StepObserver& observer = nullptr);

}  // namespace zosam

#endif  // ZOSAM_OPTIMIZER_HPP
