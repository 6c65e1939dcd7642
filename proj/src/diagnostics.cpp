#include "zosam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "zosam/optimizer.hpp"

namespace zosam {

double gradient_variance(const std::vector<Vec>& grads, const Mask& mask) {
  if (grads.size() < 2) {
    throw std::invalid_argument("gradient_variance: need a window of at least 2 gradients");
  }
  const std::size_t d = mask.size();
  for (const Vec& g : grads) {
    if (g.size() != d) throw std::invalid_argument("gradient_variance: length mismatch");
  }
  const double w = static_cast<double>(grads.size());
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t j = 0; j < d; ++j) {
    if (!mask.active(j)) continue;
    ++active;
    double mean = 0.0;
    for (const Vec& g : grads) mean += g[j];
    mean /= w;
    double ss = 0.0;
    for (const Vec& g : grads) {
      const double dmean = g[j] - mean;
      ss += dmean * dmean;
    }
    total += ss / (w - 1.0);
  }
  return active == 0 ? 0.0 : total / static_cast<double>(active);
}

namespace {

// Gaussian vector on the mask support, derived from the given seed.
Vec support_gaussian(std::size_t d, const Mask& mask, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = normal(rng);
  for (std::size_t j = 0; j < d; ++j) {
    if (!mask.active(j)) v[j] = 0.0;
  }
  return v;
}

void rescale(Vec& v, double target_norm) {
  const double n = norm2(v);
  if (n < 1e-300) throw std::invalid_argument("loss_slice: degenerate direction");
  const double s = target_norm / n;
  for (double& x : v) x *= s;
}

}  // namespace

LossSlice loss_slice(const Objective& obj, const Vec& theta, const Mask& mask,
                     const Dataset& data, std::size_t n_dirs, double r, std::size_t n_grid,
                     std::uint64_t seed) {
  if (n_dirs != 1 && n_dirs != 2) throw std::invalid_argument("loss_slice: n_dirs must be 1 or 2");
  if (!(r > 0.0)) throw std::invalid_argument("loss_slice: r must be positive");
  if (n_grid < 3 || n_grid % 2 == 0) {
    throw std::invalid_argument("loss_slice: n_grid must be odd and at least 3");
  }
  const Vec center = apply_mask(theta, mask);
  const double scale = norm2(center);
  if (scale < 1e-12) throw std::invalid_argument("loss_slice: masked parameter is degenerate");

  LossSlice slice;
  slice.r = r;
  slice.n_grid = n_grid;
  slice.seed = seed;

  Vec d1 = support_gaussian(theta.size(), mask, mix_seed(seed, 0));
  rescale(d1, scale);
  slice.directions.push_back(d1);
  if (n_dirs == 2) {
    Vec d2 = support_gaussian(theta.size(), mask, mix_seed(seed, 1));
    const double proj = dot(d2, d1) / dot(d1, d1);
    for (std::size_t j = 0; j < d2.size(); ++j) d2[j] -= proj * d1[j];
    rescale(d2, scale);
    slice.directions.push_back(std::move(d2));
  }

  const Batch all = concat(data);
  const double step = 2.0 * r / static_cast<double>(n_grid - 1);
  auto offset = [&](std::size_t i) { return -r + step * static_cast<double>(i); };

  Vec point(theta.size());
  auto value_at = [&](double a, double b) {
    for (std::size_t j = 0; j < point.size(); ++j) {
      point[j] = center[j] + a * slice.directions[0][j];
      if (n_dirs == 2) point[j] += b * slice.directions[1][j];
    }
    return obj.eval_loss(apply_mask(point, mask), all);
  };

  if (n_dirs == 1) {
    slice.values.resize(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) slice.values[i] = value_at(offset(i), 0.0);
  } else {
    slice.values.resize(n_grid * n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) {
      for (std::size_t j = 0; j < n_grid; ++j) {
        slice.values[i * n_grid + j] = value_at(offset(i), offset(j));
      }
    }
  }
  return slice;
}

std::string slice_to_csv(const LossSlice& slice) {
  std::ostringstream out;
  out << "# seed=" << slice.seed << " r=" << format_double(slice.r) << " n_grid=" << slice.n_grid
      << " n_dirs=" << slice.directions.size() << " normalization=" << slice.normalization
      << '\n';
  const std::size_t n_rows = slice.directions.size() == 1 ? 1 : slice.n_grid;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < slice.n_grid; ++j) {
      if (j) out << ',';
      out << format_double(slice.values[i * slice.n_grid + j]);
    }
    out << '\n';
  }
  return out.str();
}

double sharpness_probe(const Objective& obj, const Vec& theta, const Mask& mask,
                       const Batch& batch, double rho, std::size_t n_probe, std::uint64_t seed) {
  if (!(rho > 0.0)) throw std::invalid_argument("sharpness_probe: rho must be positive");
  if (n_probe < 1) throw std::invalid_argument("sharpness_probe: n_probe must be >= 1");

  const Vec center = apply_mask(theta, mask);
  const double base = obj.eval_loss(center, batch);

  double best = -std::numeric_limits<double>::infinity();
  Vec point(theta.size());
  for (std::size_t i = 0; i < n_probe; ++i) {
    Vec u = support_gaussian(theta.size(), mask, mix_seed(seed, i));
    const double n = norm2(u);
    if (n < 1e-300) continue;
    const double s = rho / n;
    for (std::size_t j = 0; j < point.size(); ++j) point[j] = center[j] + s * u[j];
    best = std::max(best, obj.eval_loss(apply_mask(point, mask), batch) - base);
  }
  return best;
}

std::optional<std::uint64_t> epochs_to_threshold(const TrainingTrace& trace,
                                                 double acc_threshold) {
  for (const EpochRecord& er : trace.epochs) {
    if (!std::isnan(er.eval_acc) && er.eval_acc >= acc_threshold) return er.epoch;
  }
  return std::nullopt;
}

}  // namespace zosam
