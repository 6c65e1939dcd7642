#ifndef ZOSAM_DIAGNOSTICS_HPP
#define ZOSAM_DIAGNOSTICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zosam/common.hpp"
#include "zosam/mask.hpp"
#include "zosam/objective.hpp"

namespace zosam {

struct TrainingTrace;

/// Mean over active coordinates of the unbiased per-coordinate sample
/// variance across the window. Requires at least two gradients.
double gradient_variance(const std::vector<Vec>& grads, const Mask& mask);

/// A 1-D or 2-D cut through the loss surface around a point. Directions are
/// scaled to the norm of the masked parameter ("global_norm" mode); grid
/// values are full-dataset mean losses at (theta + a*dir1 [+ b*dir2]) * M.
struct LossSlice {
  std::vector<Vec> directions;  // 1 or 2, each with ||dir|| = ||theta*M||
  double r = 0.0;
  std::size_t n_grid = 0;
  std::uint64_t seed = 0;
  std::string normalization = "global_norm";
  std::vector<double> values;  // n_grid (1-D) or n_grid*n_grid (row-major)

  double at(std::size_t i) const { return values[i]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_grid + j]; }
  std::size_t center() const { return n_grid / 2; }
};

/// n_grid must be odd so the center cell lands exactly on theta; the two
/// directions of a 2-D slice are orthogonalized before scaling.
LossSlice loss_slice(const Objective& obj, const Vec& theta, const Mask& mask,
                     const Dataset& data, std::size_t n_dirs, double r, std::size_t n_grid,
                     std::uint64_t seed);

/// Comma-separated grid with a metadata header line.
std::string slice_to_csv(const LossSlice& slice);

/// Sampled lower bound on the worst loss increase within the radius-rho
/// sphere of the mask support: max over n_probe directions of
/// L((theta+eps)*M) - L(theta*M). Probe i derives from (seed, i), so larger
/// probe counts extend smaller ones.
double sharpness_probe(const Objective& obj, const Vec& theta, const Mask& mask,
                       const Batch& batch, double rho, std::size_t n_probe, std::uint64_t seed);

/// Smallest 1-indexed epoch whose evaluation accuracy reaches the threshold.
std::optional<std::uint64_t> epochs_to_threshold(const TrainingTrace& trace,
                                                 double acc_threshold);

struct ConvergenceReport {
  std::string method;
  double alpha = 0.0;
  double threshold = 0.0;
  std::optional<std::uint64_t> epoch;
};

}  // namespace zosam

#endif  // ZOSAM_DIAGNOSTICS_HPP
