#include "zosam/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "zosam/diagnostics.hpp"

namespace zosam {

namespace {
constexpr double kDegenerateNorm = 1e-12;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::string variant_name(OptimizerVariant v) {
  switch (v) {
    case OptimizerVariant::Sgd: return "sgd";
    case OptimizerVariant::Sam: return "sam";
    case OptimizerVariant::ZoSam: return "zosam";
  }
  return "unknown";
}

std::optional<OptimizerVariant> variant_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerVariant::Sgd;
  if (name == "sam") return OptimizerVariant::Sam;
  if (name == "zosam") return OptimizerVariant::ZoSam;
  return std::nullopt;
}

std::string mask_init_name(MaskInit m) {
  switch (m) {
    case MaskInit::Random: return "random";
    case MaskInit::Magnitude: return "magnitude";
    case MaskInit::Saliency: return "saliency";
  }
  return "unknown";
}

std::optional<MaskInit> mask_init_from_name(const std::string& name) {
  if (name == "random") return MaskInit::Random;
  if (name == "magnitude") return MaskInit::Magnitude;
  if (name == "saliency") return MaskInit::Saliency;
  return std::nullopt;
}

double LrSchedule::at(std::uint64_t t) const {
  if (kind == LrScheduleKind::Constant || total_steps == 0) return base;
  const double frac = static_cast<double>(std::min(t, total_steps)) /
                      static_cast<double>(total_steps);
  constexpr double kPi = 3.14159265358979323846;
  return base * 0.5 * (1.0 + std::cos(kPi * frac));
}

Vec sam_perturb(const Vec& grad, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("sam_perturb: rho must be non-negative");
  const double n = norm2(grad);
  Vec eps(grad.size(), 0.0);
  if (n < kDegenerateNorm) return eps;
  const double scale = rho / n;
  for (std::size_t j = 0; j < grad.size(); ++j) eps[j] = scale * grad[j];
  return eps;
}

namespace {

// Shared final update: theta' = (theta - eta*(g + lambda*theta)) * M.
TrainerState apply_update(TrainerState next, const Vec& masked_theta, const Vec& g,
                          const OptimizerConfig& cfg) {
  const double eta = cfg.eta.at(next.t);
  Vec updated(masked_theta.size());
  for (std::size_t j = 0; j < masked_theta.size(); ++j) {
    updated[j] = masked_theta[j] - eta * (g[j] + cfg.lambda * masked_theta[j]);
  }
  next.theta = apply_mask(updated, next.mask);
  next.t += 1;
  return next;
}

}  // namespace

TrainerState sgd_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                      const OptimizerConfig& cfg) {
  TrainerState next = state;
  const Vec theta = apply_mask(state.theta, state.mask);
  const Vec g = obj.eval_grad(theta, batch, &next.counters);
  return apply_update(std::move(next), theta, g, cfg);
}

TrainerState sam_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                      const OptimizerConfig& cfg) {
  const double rho = cfg.rho;
  if (rho == 0.0) return sgd_step(state, obj, batch, cfg);

  TrainerState next = state;
  const Vec theta = apply_mask(state.theta, state.mask);
  const Vec g1 = obj.eval_grad(theta, batch, &next.counters);
  const Vec eps = sam_perturb(g1, rho);
  Vec perturbed(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) perturbed[j] = theta[j] + eps[j];
  const Vec g2 = obj.eval_grad(apply_mask(perturbed, state.mask), batch, &next.counters);
  return apply_update(std::move(next), theta, g2, cfg);
}

TrainerState zosam_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                        const OptimizerConfig& cfg) {
  const double rho = cfg.rho;
  if (rho == 0.0) return sgd_step(state, obj, batch, cfg);

  TrainerState next = state;
  const Vec theta = apply_mask(state.theta, state.mask);

  RgeConfig rge = cfg.rge;
  if (cfg.rge_delta_auto) rge.delta = default_rge_delta(theta, state.mask);
  const GradientEstimate est = rge_estimate(obj, theta, state.mask, batch, rge,
                                            mix_seed(state.rng_seed, mix_seed(kSaltRge, state.t)),
                                            &next.counters);

  const Vec eps = sam_perturb(est.grad, rho);
  Vec perturbed(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) perturbed[j] = theta[j] + eps[j];
  const Vec g = obj.eval_grad(apply_mask(perturbed, state.mask), batch, &next.counters);
  return apply_update(std::move(next), theta, g, cfg);
}

TrainerState optimizer_step(const TrainerState& state, const Objective& obj, const Batch& batch,
                            const OptimizerConfig& cfg) {
  switch (cfg.variant) {
    case OptimizerVariant::Sgd: return sgd_step(state, obj, batch, cfg);
    case OptimizerVariant::Sam: return sam_step(state, obj, batch, cfg);
    case OptimizerVariant::ZoSam: return zosam_step(state, obj, batch, cfg);
  }
  throw std::invalid_argument("optimizer_step: unknown variant");
}

// ---------------------------------------------------------------------------

TrainResult train(const Objective& obj, const Dataset& train_data, const SparsitySpec& sparsity,
                  MaskInit mask_init, const std::optional<GrowPruneConfig>& scheduler,
                  OptimizerConfig opt_cfg, std::uint64_t epochs, std::uint64_t seed,
                  const Dataset* eval_data, const DiagnosticsOptions& diag,
                  const StepObserver& observer) {
  if (train_data.batches.empty()) throw std::invalid_argument("train: dataset has no batches");
  if (sparsity.d != obj.dim()) throw std::invalid_argument("train: sparsity dimension mismatch");
  if (!(opt_cfg.lambda >= 0.0)) throw std::invalid_argument("train: lambda must be non-negative");

  const std::size_t n_batches = train_data.batches.size();
  const std::uint64_t total_steps = epochs * n_batches;
  if (opt_cfg.eta.total_steps == 0) opt_cfg.eta.total_steps = total_steps;

  TrainResult result;
  result.trace.variance.window = diag.variance_window;

  TrainerState state;
  state.rng_seed = seed;
  state.theta = obj.init_params(mix_seed(seed, kSaltInit));

  switch (mask_init) {
    case MaskInit::Random:
      state.mask = random_mask(sparsity.d, sparsity.k(), mix_seed(seed, kSaltMask));
      break;
    case MaskInit::Magnitude:
      state.mask = magnitude_mask(state.theta, sparsity.k());
      break;
    case MaskInit::Saliency:
      state.mask = saliency_mask(obj, state.theta, train_data.batches.front(), sparsity.k(),
                                 &result.trace.overhead);
      break;
  }
  state.theta = apply_mask(state.theta, state.mask);

  if (epochs == 0) {
    result.state = std::move(state);
    return result;
  }

  std::uint64_t sched_interval = 0;
  if (scheduler) {
    sched_interval = scheduler->interval == 0 ? n_batches : scheduler->interval;
  }

  const Batch eval_batch = eval_data ? concat(*eval_data) : Batch{};
  std::deque<Vec> grad_window;

  for (std::uint64_t epoch = 0; epoch < epochs; ++epoch) {
    // Seeded batch order, independent of all other random streams.
    std::vector<std::size_t> order(n_batches);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(),
                 std::mt19937_64(mix_seed(mix_seed(seed, kSaltBatchOrder), epoch)));

    double loss_sum = 0.0;
    double acc_sum = 0.0;
    bool have_acc = true;
    double var_sum = 0.0;
    std::size_t var_count = 0;

    for (std::size_t b = 0; b < n_batches; ++b) {
      const Batch& batch = train_data.batches[order[b]];

      // Off-the-books diagnostics at the masked iterate: batch loss/accuracy
      // and the gradient that feeds the variance window.
      const Vec at = apply_mask(state.theta, state.mask);
      const double diag_loss = obj.eval_loss(at, batch);
      const double diag_acc = obj.accuracy(at, batch);
      const Vec diag_grad = obj.eval_grad(at, batch);

      state = optimizer_step(state, obj, batch, opt_cfg);

      StepRecord rec;
      rec.step = state.t;
      rec.loss = diag_loss;
      rec.accuracy = diag_acc;
      rec.grad_norm = norm2(diag_grad);
      rec.grad_hash = hash_vec(diag_grad);
      rec.counters = state.counters;
      rec.mask_checksum = state.mask.checksum();
      result.trace.steps.push_back(rec);

      loss_sum += diag_loss;
      if (std::isnan(diag_acc)) {
        have_acc = false;
      } else {
        acc_sum += diag_acc;
      }

      grad_window.push_back(diag_grad);
      if (grad_window.size() > diag.variance_window) grad_window.pop_front();
      if (diag.variance_every > 0 && state.t % diag.variance_every == 0 &&
          grad_window.size() == diag.variance_window && diag.variance_window >= 2) {
        const std::vector<Vec> window(grad_window.begin(), grad_window.end());
        const double v = gradient_variance(window, state.mask);
        result.trace.variance.points.push_back({state.t, v});
        var_sum += v;
        ++var_count;
      }

      if (sched_interval > 0 && state.t % sched_interval == 0) {
        MaskUpdate update;
        if (scheduler->grow_rule == GrowRule::Random) {
          update = set_prune_grow(state.theta, state.mask, *scheduler,
                                  mix_seed(mix_seed(seed, kSaltGrow), state.t));
        } else {
          const Vec dense =
              obj.eval_grad(apply_mask(state.theta, state.mask), batch, &result.trace.overhead);
          update = rigl_prune_grow(state.theta, state.mask, dense, *scheduler);
        }
        state.mask = std::move(update.mask);
        state.theta = apply_mask(state.theta, state.mask);  // grown entries start at zero
      }

      if (observer) observer(state);
    }

    EpochRecord er;
    er.epoch = epoch + 1;
    er.step = state.t;
    er.train_loss = loss_sum / static_cast<double>(n_batches);
    er.train_acc = have_acc ? acc_sum / static_cast<double>(n_batches) : kNan;
    er.eval_acc =
        eval_data ? obj.accuracy(apply_mask(state.theta, state.mask), eval_batch) : kNan;
    er.grad_variance = var_count > 0 ? var_sum / static_cast<double>(var_count) : kNan;
    er.counters = state.counters;
    er.sparsity_actual =
        1.0 - static_cast<double>(state.mask.popcount()) / static_cast<double>(state.mask.size());
    er.mask_checksum = state.mask.checksum();
    result.trace.epochs.push_back(er);
  }

  result.state = std::move(state);
  return result;
}

}  // namespace zosam
