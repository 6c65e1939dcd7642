#ifndef ZOSAM_ESTIMATORS_HPP
#define ZOSAM_ESTIMATORS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "zosam/common.hpp"
#include "zosam/mask.hpp"
#include "zosam/objective.hpp"

namespace zosam {

/// Random gradient estimation settings: m probe directions, central-difference
/// step delta, optional restriction of directions to the mask support.
struct RgeConfig {
  std::size_t m = 16;
  double delta = 1e-3;
  bool restrict_to_support = false;
};

/// Scale-aware default step: 1e-3 * (1 + ||theta * mask|| / sqrt(k)).
double default_rge_delta(const Vec& theta, const Mask& mask);

struct GradientEstimate {
  Vec grad;
  std::size_t m_used = 0;
  double delta_used = 0.0;
  std::uint64_t function_evals = 0;
};

/// m standard-Gaussian directions; direction i is derived from (seed, i) so
/// the set is independent of evaluation order. With a mask supplied,
/// coordinates outside the support are zeroed after sampling.
std::vector<Vec> sample_directions(std::size_t d, std::size_t m, const Mask* mask,
                                   std::uint64_t seed);

/// Averaged directional central differences of the masked loss along m random
/// directions: (1/m) sum_i [L((theta+d u_i)*M) - L((theta-d u_i)*M)]/(2d) u_i.
/// Costs exactly 2m forward evaluations and no backward passes.
GradientEstimate rge_estimate(const Objective& obj, const Vec& theta, const Mask& mask,
                              const Batch& batch, const RgeConfig& cfg, std::uint64_t seed,
                              StepCounters* counters = nullptr);

/// Central difference of the masked loss along every coordinate axis.
/// Costs exactly 2d forward evaluations.
GradientEstimate cge_estimate(const Objective& obj, const Vec& theta, const Mask& mask,
                              const Batch& batch, double delta, StepCounters* counters = nullptr);

}  // namespace zosam

#endif  // ZOSAM_ESTIMATORS_HPP
