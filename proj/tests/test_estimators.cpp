#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "zosam/estimators.hpp"

using namespace zosam;
using zosam::testing::dummy_batch;
using zosam::testing::random_vec;

TEST_CASE("direction sampling is reproducible and maskable") {
  const auto a = sample_directions(3, 2, nullptr, 42);
  const auto b = sample_directions(3, 2, nullptr, 42);
  CHECK(a == b);

  Mask m(3, 2);
  m.bits = {1, 0, 1};
  const auto restricted = sample_directions(3, 4, &m, 7);
  for (const Vec& u : restricted) CHECK(u[1] == 0.0);
  // On-support coordinates keep the unrestricted draws.
  const auto plain = sample_directions(3, 4, nullptr, 7);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(restricted[i][0] == plain[i][0]);
    CHECK(restricted[i][2] == plain[i][2]);
  }

  CHECK_THROWS_AS(sample_directions(3, 0, nullptr, 0), std::invalid_argument);
}

TEST_CASE("sampled directions have standard-normal moments") {
  const std::size_t d = 1000;
  const std::size_t trials = 10000;
  Vec mean(d, 0.0);
  Vec sq(d, 0.0);
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const Vec u = sample_directions(d, 1, nullptr, mix_seed(27, seed))[0];
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += u[j];
      sq[j] += u[j] * u[j];
    }
  }
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] /= static_cast<double>(trials);
    const double var = sq[j] / static_cast<double>(trials) - mean[j] * mean[j];
    worst_mean = std::max(worst_mean, std::abs(mean[j]));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
  }
  CHECK(worst_mean <= 3.0 / std::sqrt(static_cast<double>(trials)));
  CHECK(worst_var <= 0.05);
}

TEST_CASE("rge on a constant objective is exactly zero") {
  const testing::ConstantObjective constant(4);
  StepCounters counters;
  RgeConfig cfg;
  cfg.m = 5;
  cfg.delta = 1e-2;
  const GradientEstimate est =
      rge_estimate(constant, {1.0, 2.0, 3.0, 4.0}, Mask::all_ones(4), dummy_batch(), cfg, 3,
                   &counters);
  for (double g : est.grad) CHECK(g == 0.0);
  CHECK(est.function_evals == 10);
  CHECK(counters.forward_evals == 10);
  CHECK(counters.backward_passes == 0);
}

TEST_CASE("rge is algebraically exact on linear maps") {
  // Estimate equals (g'u) u for the sampled direction, for any delta.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t d = 2 + seed % 7;
    const Vec g = random_vec(d, 100 + seed);
    const testing::LinearObjective linear(g);
    const Vec theta(d, 0.0);
    for (double delta : {1e-1, 1e-3, 1e-6}) {
      RgeConfig cfg;
      cfg.m = 1;
      cfg.delta = delta;
      const GradientEstimate est =
          rge_estimate(linear, theta, Mask::all_ones(d), dummy_batch(), cfg, seed);
      const Vec u = sample_directions(d, 1, nullptr, seed)[0];
      const double coeff = dot(g, u);
      for (std::size_t j = 0; j < d; ++j) {
        const double expected = coeff * u[j];
        CHECK(std::abs(est.grad[j] - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
      }
    }
  }
}

TEST_CASE("rge directional coefficient is exact on squared norms") {
  // f = ||theta||^2: the central difference along u is exactly 2 theta'u.
  const QuadraticObjective quad({2.0, 0.0, 0.0, 2.0}, {0.0, 0.0});
  const Vec theta = {1.0, 2.0};
  RgeConfig cfg;
  cfg.m = 1;
  cfg.delta = 0.1;
  const GradientEstimate est =
      rge_estimate(quad, theta, Mask::all_ones(2), dummy_batch(), cfg, 11);
  const Vec u = sample_directions(2, 1, nullptr, 11)[0];
  const double coeff = 2.0 * dot(theta, u);
  CHECK(est.grad[0] == doctest::Approx(coeff * u[0]).epsilon(1e-12));
  CHECK(est.grad[1] == doctest::Approx(coeff * u[1]).epsilon(1e-12));
}

TEST_CASE("restricted sampling keeps the estimate on the support") {
  const auto quad = QuadraticObjective::identity(6);
  Mask m(6, 3);
  m.bits = {1, 0, 1, 0, 1, 0};
  RgeConfig cfg;
  cfg.m = 8;
  cfg.delta = 1e-3;
  cfg.restrict_to_support = true;
  const GradientEstimate est =
      rge_estimate(quad, random_vec(6, 2), m, dummy_batch(), cfg, 5);
  CHECK(est.grad[1] == 0.0);
  CHECK(est.grad[3] == 0.0);
  CHECK(est.grad[5] == 0.0);
}

TEST_CASE("rge estimator variance shrinks as one over m") {
  const auto quad = QuadraticObjective::identity(10);
  const Vec theta = random_vec(10, 31);
  const std::size_t trials = 1000;
  const auto mean_coord_variance = [&](std::size_t m) {
    RgeConfig cfg;
    cfg.m = m;
    cfg.delta = 1e-4;
    Vec mean(10, 0.0), sq(10, 0.0);
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
      const GradientEstimate est = rge_estimate(quad, theta, Mask::all_ones(10), dummy_batch(),
                                                cfg, mix_seed(5555, seed));
      for (std::size_t j = 0; j < 10; ++j) {
        mean[j] += est.grad[j];
        sq[j] += est.grad[j] * est.grad[j];
      }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
      mean[j] /= static_cast<double>(trials);
      total += sq[j] / static_cast<double>(trials) - mean[j] * mean[j];
    }
    return total / 10.0;
  };
  const double ratio = mean_coord_variance(64) / mean_coord_variance(4);
  CHECK(ratio >= 1.0 / 16.0 * 0.5);
  CHECK(ratio <= 1.0 / 16.0 * 2.0);
}

TEST_CASE("rge reports the offending direction on overflow") {
  const testing::ExpObjective exp_obj(2);
  RgeConfig cfg;
  cfg.m = 2;
  cfg.delta = 1.0;
  try {
    rge_estimate(exp_obj, {715.0, 0.0}, Mask::all_ones(2), dummy_batch(), cfg, 0);
    FAIL("expected NumericOverflow");
  } catch (const NumericOverflow& e) {
    CHECK(std::string(e.what()).find("direction") != std::string::npos);
  }
}

TEST_CASE("cge is exact on low-degree polynomials and masked axes") {
  const testing::PolyObjective poly;
  const GradientEstimate est =
      cge_estimate(poly, {1.0, 1.0}, Mask::all_ones(2), dummy_batch(), 0.5);
  CHECK(est.grad[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(est.grad[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(est.function_evals == 4);

  Mask m(2, 1);
  m.bits = {0, 1};
  const GradientEstimate masked =
      cge_estimate(poly, {1.0, 1.0}, m, dummy_batch(), 0.5);
  CHECK(masked.grad[0] == 0.0);  // the mask erases the axis perturbation

  CHECK_THROWS_AS(cge_estimate(poly, {1.0, 1.0}, Mask::all_ones(2), dummy_batch(), 0.0),
                  std::invalid_argument);
}

TEST_CASE("cge error shrinks quadratically in the step") {
  const MlpObjective mlp({2, 5, 2});
  const Dataset data = make_synthetic_dataset(SyntheticKind::GaussianBlobs, 32, 2, 2, 21);
  const Batch& batch = data.batches[0];
  const Vec theta = mlp.init_params(8);
  const Vec analytic = mlp.eval_grad(theta, batch);
  const auto max_err = [&](double delta) {
    const GradientEstimate est =
        cge_estimate(mlp, theta, Mask::all_ones(mlp.dim()), batch, delta);
    double worst = 0.0;
    for (std::size_t j = 0; j < analytic.size(); ++j) {
      worst = std::max(worst, std::abs(est.grad[j] - analytic[j]));
    }
    return worst;
  };
  CHECK(max_err(1e-3) / max_err(5e-4) >= 3.5);
}
