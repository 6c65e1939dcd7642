#include <string>

#include "doctest.h"
#include "zosam/config.hpp"

using namespace zosam;

TEST_CASE("a minimal config fills every default") {
  const ExperimentConfig cfg = parse_config("objective=quadratic\nepochs=3\n");
  CHECK(cfg.objective == "quadratic");
  CHECK(cfg.epochs == 3);
  CHECK(cfg.alpha == 0.9);
  CHECK(cfg.mask_init == MaskInit::Random);
  CHECK(cfg.variants == std::vector<OptimizerVariant>{OptimizerVariant::Sgd});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(cfg.rho == 0.05);
  CHECK(cfg.lambda == 5e-4);
  CHECK(cfg.rge_m == 16);
  CHECK(cfg.rge_delta == 0.0);
  CHECK(cfg.variance_window == 20);
  CHECK(cfg.variance_every == 10);
  CHECK(cfg.acc_threshold == 0.9);
}

TEST_CASE("comments and spacing are tolerated") {
  const ExperimentConfig cfg = parse_config(
      "# experiment\n"
      "objective = rosenbrock   # objective family\n"
      "\n"
      "rosen_dim = 4\n"
      "epochs = 2\n");
  CHECK(cfg.objective == "rosenbrock");
  CHECK(cfg.rosen_dim == 4);
}

TEST_CASE("out-of-range values name the key") {
  try {
    parse_config("objective=quadratic\nepochs=1\nalpha=1.5\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
}

TEST_CASE("unknown keys are hard errors with a location") {
  try {
    parse_config("objective=quadratic\nepochs=1\nalhpa=0.9\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("alhpa") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }
}

TEST_CASE("missing required keys and duplicates are rejected") {
  CHECK_THROWS_AS(parse_config("epochs=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nobjective=mlp\nepochs=1\n"), ConfigError);
}

TEST_CASE("model objectives demand a dataset") {
  CHECK_THROWS_AS(parse_config("objective=mlp\nepochs=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=logreg\nepochs=1\n"), ConfigError);
  CHECK_NOTHROW(parse_config("objective=mlp\ndataset=gaussian_blobs\nepochs=1\n"));
}

TEST_CASE("serialized configs parse back to the same value") {
  ExperimentConfig cfg = parse_config(
      "objective=mlp\n"
      "dataset=two_arcs\n"
      "mlp_hidden=8,4\n"
      "variants=sgd,zosam\n"
      "alpha=0.95\n"
      "rho=0.02\n"
      "rge_delta=0.001\n"
      "seeds=3,5\n"
      "scheduler=set\n"
      "epochs=7\n");
  CHECK(parse_config(serialize_config(cfg)) == cfg);

  const ExperimentConfig minimal = parse_config("objective=quadratic\nepochs=1\n");
  CHECK(parse_config(serialize_config(minimal)) == minimal);
}

TEST_CASE("config factories build the right components") {
  const ExperimentConfig cfg = parse_config(
      "objective=mlp\n"
      "dataset=gaussian_blobs\n"
      "in_dim=2\n"
      "n_classes=2\n"
      "mlp_hidden=32,16\n"
      "epochs=1\n");
  const auto obj = make_objective(cfg);
  CHECK(obj->dim() == 2 * 32 + 32 + 32 * 16 + 16 + 16 * 2 + 2);

  const OptimizerConfig opt = make_optimizer_config(cfg, OptimizerVariant::ZoSam);
  CHECK(opt.variant == OptimizerVariant::ZoSam);
  CHECK(opt.rge.m == 16);
  CHECK(opt.rge_delta_auto);

  CHECK_FALSE(make_scheduler_config(cfg).has_value());
  const ExperimentConfig with_sched =
      parse_config("objective=quadratic\nepochs=1\nscheduler=rigl\nzeta=0.4\n");
  const auto sched = make_scheduler_config(with_sched);
  REQUIRE(sched.has_value());
  CHECK(sched->grow_rule == GrowRule::GradMagnitude);
  CHECK(sched->zeta == 0.4);
}

TEST_CASE("bad values carry a diagnostic") {
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=1\nzeta=1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=1\neta=0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=1\nvariants=sgd,adam\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=1\nslice_grid=10\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=1\nrge_delta=-1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic\nepochs=x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=banana\nepochs=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("objective=quadratic epochs=1\n"), ConfigError);
}
