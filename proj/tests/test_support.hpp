#ifndef ZOSAM_TEST_SUPPORT_HPP
#define ZOSAM_TEST_SUPPORT_HPP

#include <cmath>
#include <random>
#include <utility>

#include "zosam/objective.hpp"

namespace zosam::testing {

inline Batch dummy_batch() {
  Batch b;
  b.rows = 1;
  b.cols = 1;
  b.inputs = {0.0};
  b.targets = {0};
  return b;
}

/// f(theta) = g' theta. The gradient estimator is algebraically exact here.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vec g) : Objective(g.size()), g_(std::move(g)) {}
  ObjectiveKind kind() const override { return ObjectiveKind::Quadratic; }
  std::string name() const override { return "linear"; }

 protected:
  double loss_impl(const Vec& theta, const Batch&) const override { return dot(g_, theta); }
  Vec grad_impl(const Vec&, const Batch&) const override { return g_; }

 private:
  Vec g_;
};

class ConstantObjective final : public Objective {
 public:
  explicit ConstantObjective(std::size_t d, double value = 1.0)
      : Objective(d), value_(value) {}
  ObjectiveKind kind() const override { return ObjectiveKind::Quadratic; }
  std::string name() const override { return "constant"; }

 protected:
  double loss_impl(const Vec&, const Batch&) const override { return value_; }
  Vec grad_impl(const Vec& theta, const Batch&) const override { return Vec(theta.size(), 0.0); }

 private:
  double value_;
};

/// f(theta) = theta_0^2 + 3 theta_1; central differences are exact on it.
class PolyObjective final : public Objective {
 public:
  PolyObjective() : Objective(2) {}
  ObjectiveKind kind() const override { return ObjectiveKind::Quadratic; }
  std::string name() const override { return "poly"; }

 protected:
  double loss_impl(const Vec& theta, const Batch&) const override {
    return theta[0] * theta[0] + 3.0 * theta[1];
  }
  Vec grad_impl(const Vec& theta, const Batch&) const override {
    return {2.0 * theta[0], 3.0};
  }
};

/// f(theta) = exp(theta_0); overflows to +inf for large arguments.
class ExpObjective final : public Objective {
 public:
  explicit ExpObjective(std::size_t d) : Objective(d) {}
  ObjectiveKind kind() const override { return ObjectiveKind::Quadratic; }
  std::string name() const override { return "exp"; }

 protected:
  double loss_impl(const Vec& theta, const Batch&) const override { return std::exp(theta[0]); }
  Vec grad_impl(const Vec& theta, const Batch&) const override {
    Vec g(theta.size(), 0.0);
    g[0] = std::exp(theta[0]);
    return g;
  }
};

inline Vec random_vec(std::size_t d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(d);
  for (double& x : v) x = normal(rng);
  return v;
}

/// Largest |a-b| / max(1, ||a||_inf); the usual gradient-check metric.
inline double max_rel_error(const Vec& a, const Vec& b) {
  double scale = 1.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    worst = std::max(worst, std::abs(a[j] - b[j]) / scale);
  }
  return worst;
}

}  // namespace zosam::testing

#endif  // ZOSAM_TEST_SUPPORT_HPP
