#include "zosam/estimators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace zosam {

double default_rge_delta(const Vec& theta, const Mask& mask) {
  const Vec masked = apply_mask(theta, mask);
  const std::size_t k = std::max<std::size_t>(mask.popcount(), 1);
  return 1e-3 * (1.0 + norm2(masked) / std::sqrt(static_cast<double>(k)));
}

std::vector<Vec> sample_directions(std::size_t d, std::size_t m, const Mask* mask,
                                   std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_directions: m must be >= 1");
  if (mask && mask->size() != d) {
    throw std::invalid_argument("sample_directions: mask length mismatch");
  }
  std::vector<Vec> dirs(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec& u = dirs[i];
    u.resize(d);
    for (std::size_t j = 0; j < d; ++j) u[j] = normal(rng);
    if (mask) {
      for (std::size_t j = 0; j < d; ++j) {
        if (!mask->active(j)) u[j] = 0.0;
      }
    }
  }
  return dirs;
}

GradientEstimate rge_estimate(const Objective& obj, const Vec& theta, const Mask& mask,
                              const Batch& batch, const RgeConfig& cfg, std::uint64_t seed,
                              StepCounters* counters) {
  if (cfg.m < 1) throw std::invalid_argument("rge_estimate: m must be >= 1");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("rge_estimate: delta must be positive");
  if (theta.size() != mask.size()) throw std::invalid_argument("rge_estimate: length mismatch");

  const std::size_t d = theta.size();
  const std::vector<Vec> dirs =
      sample_directions(d, cfg.m, cfg.restrict_to_support ? &mask : nullptr, seed);

  GradientEstimate est;
  est.grad.assign(d, 0.0);
  est.m_used = cfg.m;
  est.delta_used = cfg.delta;

  Vec probe(d);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    const Vec& u = dirs[i];
    for (std::size_t j = 0; j < d; ++j) probe[j] = theta[j] + cfg.delta * u[j];
    double up, down;
    try {
      up = obj.eval_loss(apply_mask(probe, mask), batch, counters);
      for (std::size_t j = 0; j < d; ++j) probe[j] = theta[j] - cfg.delta * u[j];
      down = obj.eval_loss(apply_mask(probe, mask), batch, counters);
    } catch (const NumericOverflow& e) {
      throw NumericOverflow("rge_estimate: direction " + std::to_string(i) + ": " + e.what());
    }
    const double coeff = (up - down) / (2.0 * cfg.delta);
    for (std::size_t j = 0; j < d; ++j) est.grad[j] += coeff * u[j];
    est.function_evals += 2;
  }

  const double inv_m = 1.0 / static_cast<double>(cfg.m);
  for (std::size_t j = 0; j < d; ++j) est.grad[j] *= inv_m;
  return est;
}

GradientEstimate cge_estimate(const Objective& obj, const Vec& theta, const Mask& mask,
                              const Batch& batch, double delta, StepCounters* counters) {
  if (!(delta > 0.0)) throw std::invalid_argument("cge_estimate: delta must be positive");
  if (theta.size() != mask.size()) throw std::invalid_argument("cge_estimate: length mismatch");

  const std::size_t d = theta.size();
  GradientEstimate est;
  est.grad.assign(d, 0.0);
  est.m_used = d;
  est.delta_used = delta;

  Vec probe = theta;
  for (std::size_t j = 0; j < d; ++j) {
    const double saved = probe[j];
    double up, down;
    try {
      probe[j] = saved + delta;
      up = obj.eval_loss(apply_mask(probe, mask), batch, counters);
      probe[j] = saved - delta;
      down = obj.eval_loss(apply_mask(probe, mask), batch, counters);
    } catch (const NumericOverflow& e) {
      throw NumericOverflow("cge_estimate: coordinate " + std::to_string(j) + ": " + e.what());
    }
    probe[j] = saved;
    est.grad[j] = (up - down) / (2.0 * delta);
    est.function_evals += 2;
  }
  return est;
}

}  // namespace zosam
