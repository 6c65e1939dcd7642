#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "zosam/runner.hpp"

using namespace zosam;

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "zosam_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_data_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

const char* kSmallConfig =
    "objective=mlp\n"
    "dataset=gaussian_blobs\n"
    "n=100\n"
    "batch_size=20\n"
    "mlp_hidden=4\n"
    "alpha=0.5\n"
    "variants=sgd,zosam\n"
    "rge_m=4\n"
    "epochs=3\n"
    "seeds=0,1\n";

}  // namespace

TEST_CASE("metrics files carry one row per epoch and run") {
  const fs::path dir = temp_dir("rows");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  const RunArtifacts artifacts = run_experiment(parse_config(kSmallConfig), opts);
  CHECK(artifacts.all_ok);
  const std::string metrics = read_file(artifacts.metrics_path);
  CHECK(count_data_rows(metrics) == 3 * 4);  // epochs x (variants x seeds)
  CHECK(fs::exists(artifacts.final_state_path));
}

TEST_CASE("repeated and parallel executions produce identical bytes") {
  const ExperimentConfig cfg = parse_config(kSmallConfig);
  const fs::path d1 = temp_dir("det1");
  const fs::path d2 = temp_dir("det2");
  const fs::path d3 = temp_dir("det3");
  RunnerOptions o1, o2, o3;
  o1.out_dir = d1.string();
  o2.out_dir = d2.string();
  o3.out_dir = d3.string();
  o3.jobs = 4;
  const RunArtifacts a1 = run_experiment(cfg, o1);
  const RunArtifacts a2 = run_experiment(cfg, o2);
  const RunArtifacts a3 = run_experiment(cfg, o3);
  CHECK(read_file(a1.metrics_path) == read_file(a2.metrics_path));
  CHECK(read_file(a1.metrics_path) == read_file(a3.metrics_path));
  CHECK(read_file(a1.final_state_path) == read_file(a3.final_state_path));
}

TEST_CASE("counter columns reflect the per-step cost of each variant") {
  const fs::path dir = temp_dir("counters");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  const ExperimentConfig cfg = parse_config(
      "objective=quadratic\n"
      "quad_dim=6\n"
      "variants=sgd,sam,zosam\n"
      "rge_m=16\n"
      "epochs=100\n"
      "seeds=0\n");
  const RunArtifacts artifacts = run_experiment(cfg, opts);
  const ComparisonReport report = compare_runs({artifacts.metrics_path});
  REQUIRE(report.methods.size() == 3);
  for (const MethodSummary& m : report.methods) {
    if (m.method == "sgd") {
      CHECK(m.forward_total == 100.0);
      CHECK(m.backward_total == 100.0);
    } else if (m.method == "sam") {
      CHECK(m.forward_total == 200.0);
      CHECK(m.backward_total == 200.0);
    } else {
      CHECK(m.forward_total == 3300.0);
      CHECK(m.backward_total == 100.0);
    }
  }
}

TEST_CASE("comparing a run with itself yields zero spread") {
  const fs::path dir = temp_dir("selfcmp");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  const ExperimentConfig cfg = parse_config(
      "objective=mlp\n"
      "dataset=gaussian_blobs\n"
      "n=100\n"
      "mlp_hidden=4\n"
      "epochs=2\n"
      "seeds=0\n");
  const RunArtifacts artifacts = run_experiment(cfg, opts);
  const ComparisonReport report =
      compare_runs({artifacts.metrics_path, artifacts.metrics_path});
  REQUIRE(report.methods.size() == 1);
  CHECK(report.methods[0].runs == 2);
  CHECK(report.methods[0].final_acc_std == 0.0);
}

TEST_CASE("methods that never reach the threshold render as missing") {
  const fs::path dir = temp_dir("nothresh");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  // One epoch of a quadratic run: no accuracy, so the threshold is never hit.
  const ExperimentConfig cfg = parse_config("objective=quadratic\nepochs=1\nseeds=0\n");
  const RunArtifacts artifacts = run_experiment(cfg, opts);
  const ComparisonReport report = compare_runs({artifacts.metrics_path});
  REQUIRE(report.methods.size() == 1);
  CHECK_FALSE(report.methods[0].epochs_to_threshold_median.has_value());
  CHECK(report.render().find("-") != std::string::npos);
}

TEST_CASE("schema violations name the offending column") {
  const fs::path dir = temp_dir("schema");
  const fs::path bad = dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "# objective=quadratic\n# epochs=1\n";
    out << "variant,seed,epoch,step,train_loss,train_acc,eval_acc,grad_var,forward_evals,"
           "backward_passes,sparsity_actual,mask_checksum,status\n";
  }
  try {
    compare_runs({bad.string()});
    FAIL("expected a schema error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("grad_var") != std::string::npos);
  }
}

TEST_CASE("numeric overflow marks the run failed but keeps siblings") {
  const fs::path dir = temp_dir("overflow");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  // A divergent step size blows the quadratic run up quickly.
  const ExperimentConfig cfg = parse_config(
      "objective=quadratic\n"
      "quad_dim=4\n"
      "eta=1000\n"
      "eta_schedule=constant\n"
      "lambda=0\n"
      "epochs=200\n"
      "seeds=0,1\n");
  const RunArtifacts artifacts = run_experiment(cfg, opts);
  CHECK_FALSE(artifacts.all_ok);
  const std::string metrics = read_file(artifacts.metrics_path);
  CHECK(metrics.find(",failed") != std::string::npos);
  const ComparisonReport report = compare_runs({artifacts.metrics_path});
  REQUIRE(report.methods.size() == 1);
  CHECK(report.methods[0].failed == 2);
}

TEST_CASE("slice artifacts are written when enabled") {
  const fs::path dir = temp_dir("slices");
  RunnerOptions opts;
  opts.out_dir = dir.string();
  opts.force_slices = true;
  const ExperimentConfig cfg = parse_config(
      "objective=mlp\n"
      "dataset=gaussian_blobs\n"
      "n=60\n"
      "mlp_hidden=4\n"
      "epochs=2\n"
      "seeds=0\n"
      "slice_grid=5\n"
      "slice_r=0.5\n");
  const RunArtifacts artifacts = run_experiment(cfg, opts);
  REQUIRE(artifacts.slice_paths.size() == 1);
  const std::string slice = read_file(artifacts.slice_paths[0]);
  CHECK(slice.find("# seed=") != std::string::npos);
}

TEST_CASE("the config echo reproduces the run") {
  const fs::path d1 = temp_dir("echo1");
  const fs::path d2 = temp_dir("echo2");
  RunnerOptions o1, o2;
  o1.out_dir = d1.string();
  o2.out_dir = d2.string();
  const RunArtifacts a1 = run_experiment(parse_config(kSmallConfig), o1);
  const ExperimentConfig echoed = parse_config(a1.config_echo);
  const RunArtifacts a2 = run_experiment(echoed, o2);
  CHECK(read_file(a1.metrics_path) == read_file(a2.metrics_path));
}
