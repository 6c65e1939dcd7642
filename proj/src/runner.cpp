#include "zosam/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace zosam {

namespace {

namespace fs = std::filesystem;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct RunOutcome {
  OptimizerVariant variant = OptimizerVariant::Sgd;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  TrainingTrace trace;
  TrainerState state;
  std::string slice_csv;  // empty when slices are off or failed
};

struct RunData {
  std::unique_ptr<Objective> objective;
  Dataset train_data;
  Dataset eval_data;
  Dataset full_data;
  bool has_eval = false;
};

Dataset dummy_dataset() {
  Batch b;
  b.rows = 1;
  b.cols = 1;
  b.inputs = {0.0};
  b.targets = {0};
  Dataset d;
  d.batches.push_back(std::move(b));
  d.n_total = 1;
  return d;
}

RunData prepare_run(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunData run;
  run.objective = make_objective(cfg);
  if (cfg.dataset == DatasetKind::None) {
    run.train_data = dummy_dataset();
    run.full_data = run.train_data;
    return run;
  }

  const SyntheticKind kind = cfg.dataset == DatasetKind::GaussianBlobs
                                 ? SyntheticKind::GaussianBlobs
                                 : SyntheticKind::TwoArcs;
  run.full_data =
      make_synthetic_dataset(kind, cfg.n, cfg.in_dim, cfg.n_classes, mix_seed(seed, kSaltData));

  // Deterministic 80/20 split.
  std::vector<std::size_t> order(cfg.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), std::mt19937_64(mix_seed(seed, kSaltSplit)));
  const std::size_t n_eval = cfg.n / 5;
  const std::vector<std::size_t> train_idx(order.begin(), order.end() - n_eval);
  const std::vector<std::size_t> eval_idx(order.end() - n_eval, order.end());

  run.train_data = rebatch(select(run.full_data, train_idx), cfg.batch_size);
  if (n_eval > 0) {
    run.eval_data = select(run.full_data, eval_idx);
    run.has_eval = true;
  }
  return run;
}

RunOutcome execute_run(const ExperimentConfig& cfg, OptimizerVariant variant, std::uint64_t seed,
                       bool want_slice) {
  RunOutcome out;
  out.variant = variant;
  out.seed = seed;
  try {
    RunData run = prepare_run(cfg, seed);
    const SparsitySpec sparsity(cfg.alpha, run.objective->dim());
    DiagnosticsOptions diag;
    diag.variance_window = cfg.variance_window;
    diag.variance_every = cfg.variance_every;

    TrainResult result =
        train(*run.objective, run.train_data, sparsity, cfg.mask_init,
              make_scheduler_config(cfg), make_optimizer_config(cfg, variant), cfg.epochs, seed,
              run.has_eval ? &run.eval_data : nullptr, diag);
    out.trace = std::move(result.trace);
    out.state = std::move(result.state);

    if (want_slice) {
      try {
        const LossSlice slice =
            loss_slice(*run.objective, out.state.theta, out.state.mask, run.full_data,
                       cfg.slice_dirs, cfg.slice_r, cfg.slice_grid, cfg.slice_seed);
        out.slice_csv = slice_to_csv(slice);
      } catch (const std::invalid_argument& e) {
        out.slice_csv.clear();
        out.error = std::string("slice skipped: ") + e.what();
      }
    }
  } catch (const NumericOverflow& e) {
    out.ok = false;
    out.error = e.what();
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

std::string u64_hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace

const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> header = {
      "variant",        "seed",          "epoch",           "step",
      "train_loss",     "train_acc",     "eval_acc",        "grad_variance",
      "forward_evals",  "backward_passes", "sparsity_actual", "mask_checksum",
      "status"};
  return header;
}

RunArtifacts run_experiment(const ExperimentConfig& base_cfg, const RunnerOptions& opts) {
  // Fold runner-level overrides into the config so the echoed form
  // reproduces exactly what ran.
  ExperimentConfig cfg = base_cfg;
  if (opts.seed_override) cfg.seeds = *opts.seed_override;
  if (opts.force_slices) cfg.slice_enable = true;
  const std::vector<std::uint64_t>& seeds = cfg.seeds;
  if (seeds.empty()) throw ConfigError("run_experiment: no seeds");
  const bool want_slice = cfg.slice_enable;

  struct RunSpec {
    OptimizerVariant variant;
    std::uint64_t seed;
  };
  std::vector<RunSpec> specs;
  for (OptimizerVariant v : cfg.variants) {
    for (std::uint64_t s : seeds) specs.push_back({v, s});
  }

  std::vector<RunOutcome> outcomes(specs.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, specs.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      outcomes[i] = execute_run(cfg, specs[i].variant, specs[i].seed, want_slice);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) return;
          outcomes[i] = execute_run(cfg, specs[i].variant, specs[i].seed, want_slice);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }

  fs::create_directories(opts.out_dir);
  RunArtifacts artifacts;
  artifacts.config_echo = serialize_config(cfg);
  artifacts.metrics_path = (fs::path(opts.out_dir) / "metrics.csv").string();
  artifacts.final_state_path = (fs::path(opts.out_dir) / "final_state.txt").string();

  // Metrics file: config echo, header, then per-epoch rows in run order.
  std::ostringstream metrics;
  {
    std::istringstream echo(artifacts.config_echo);
    std::string line;
    while (std::getline(echo, line)) metrics << "# " << line << '\n';
  }
  {
    const auto& header = metrics_header();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) metrics << ',';
      metrics << header[i];
    }
    metrics << '\n';
  }
  for (const RunOutcome& out : outcomes) {
    const std::string vname = variant_name(out.variant);
    if (!out.ok) {
      metrics << vname << ',' << out.seed << ",0,0,nan,nan,nan,nan,0,0,nan,"
              << u64_hex(0) << ",failed\n";
      artifacts.all_ok = false;
      continue;
    }
    for (const EpochRecord& er : out.trace.epochs) {
      metrics << vname << ',' << out.seed << ',' << er.epoch << ',' << er.step << ','
              << format_double(er.train_loss) << ',' << format_double(er.train_acc) << ','
              << format_double(er.eval_acc) << ',' << format_double(er.grad_variance) << ','
              << er.counters.forward_evals << ',' << er.counters.backward_passes << ','
              << format_double(er.sparsity_actual) << ',' << u64_hex(er.mask_checksum)
              << ",ok\n";
    }
  }
  write_file(artifacts.metrics_path, metrics.str());

  // Final states: one block per run; masks use their plain-text form.
  std::ostringstream finals;
  for (const RunOutcome& out : outcomes) {
    finals << "run variant=" << variant_name(out.variant) << " seed=" << out.seed
           << " status=" << (out.ok ? "ok" : "failed") << '\n';
    if (!out.ok) {
      finals << "error " << out.error << '\n';
      continue;
    }
    finals << "theta " << out.state.theta.size();
    for (double x : out.state.theta) finals << ' ' << format_double(x);
    finals << '\n';
    finals << mask_to_text(out.state.mask);
  }
  write_file(artifacts.final_state_path, finals.str());

  if (want_slice) {
    for (const RunOutcome& out : outcomes) {
      if (out.slice_csv.empty()) continue;
      const std::string name =
          "slice_" + variant_name(out.variant) + "_seed" + std::to_string(out.seed) + ".csv";
      const std::string path = (fs::path(opts.out_dir) / name).string();
      write_file(path, out.slice_csv);
      artifacts.slice_paths.push_back(path);
    }
  }

  return artifacts;
}

// ---------------------------------------------------------------------------
// compare

namespace {

struct ParsedRun {
  std::string method;
  double alpha = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::vector<std::uint64_t> epochs;
  std::vector<double> eval_acc;
  std::vector<double> grad_variance;
  std::uint64_t forward_total = 0;
  std::uint64_t backward_total = 0;
  double final_acc = kNan;
};

double parse_double_token(const std::string& tok) {
  if (tok == "nan" || tok == "-nan") return kNan;
  return std::stod(tok);
}

std::vector<ParsedRun> parse_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("compare: cannot open '" + path + "'");

  std::string line;
  std::string config_text;
  bool header_seen = false;
  std::map<std::pair<std::string, std::uint64_t>, ParsedRun> runs;
  ExperimentConfig cfg;

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      config_text += body + '\n';
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string> tokens;
    {
      std::string cur;
      for (char c : line) {
        if (c == ',') {
          tokens.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      tokens.push_back(cur);
    }

    if (!header_seen) {
      const auto& header = metrics_header();
      if (tokens.size() != header.size()) {
        throw std::runtime_error("compare: '" + path + "': expected " +
                                 std::to_string(header.size()) + " columns, got " +
                                 std::to_string(tokens.size()));
      }
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (tokens[i] != header[i]) {
          throw std::runtime_error("compare: '" + path + "': column " + std::to_string(i + 1) +
                                   " is '" + tokens[i] + "', expected '" + header[i] + "'");
        }
      }
      header_seen = true;
      cfg = parse_config(config_text);
      continue;
    }

    if (tokens.size() != metrics_header().size()) {
      throw std::runtime_error("compare: '" + path + "': malformed row");
    }

    const std::string& method = tokens[0];
    const auto seed = static_cast<std::uint64_t>(std::stoull(tokens[1]));
    auto& run = runs[{method, seed}];
    run.method = method;
    run.seed = seed;
    run.alpha = cfg.alpha;
    run.threshold = cfg.acc_threshold;
    if (tokens[12] == "failed") {
      run.ok = false;
      continue;
    }
    run.epochs.push_back(std::stoull(tokens[2]));
    run.eval_acc.push_back(parse_double_token(tokens[6]));
    run.grad_variance.push_back(parse_double_token(tokens[7]));
    run.forward_total = std::stoull(tokens[8]);
    run.backward_total = std::stoull(tokens[9]);
    run.final_acc = parse_double_token(tokens[6]);
  }

  if (!header_seen) throw std::runtime_error("compare: '" + path + "': no header row");

  std::vector<ParsedRun> out;
  out.reserve(runs.size());
  for (auto& [key, run] : runs) out.push_back(std::move(run));
  return out;
}

double lower_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[(xs.size() - 1) / 2];
}

}  // namespace

ComparisonReport compare_runs(const std::vector<std::string>& metrics_files) {
  if (metrics_files.empty()) throw std::runtime_error("compare: no metrics files");

  std::vector<ParsedRun> all;
  for (const std::string& path : metrics_files) {
    std::vector<ParsedRun> part = parse_metrics_file(path);
    all.insert(all.end(), part.begin(), part.end());
  }

  ComparisonReport report;
  std::map<std::pair<std::string, double>, std::vector<const ParsedRun*>> groups;
  for (const ParsedRun& run : all) groups[{run.method, run.alpha}].push_back(&run);

  for (const auto& [key, group] : groups) {
    MethodSummary summary;
    summary.method = key.first;
    summary.alpha = key.second;
    summary.runs = group.size();

    std::vector<double> epochs_to;
    std::vector<double> final_accs;
    std::vector<double> grad_vars;
    double fwd = 0.0, bwd = 0.0;
    std::size_t n_ok = 0;

    for (const ParsedRun* run : group) {
      summary.threshold = run->threshold;

      RunConvergence conv;
      conv.method = run->method;
      conv.alpha = run->alpha;
      conv.threshold = run->threshold;
      conv.seed = run->seed;
      conv.ok = run->ok;

      if (!run->ok) {
        ++summary.failed;
        report.runs.push_back(conv);
        continue;
      }
      ++n_ok;
      fwd += static_cast<double>(run->forward_total);
      bwd += static_cast<double>(run->backward_total);

      // First epoch reaching the threshold.
      std::optional<std::uint64_t> reached;
      for (std::size_t i = 0; i < run->epochs.size(); ++i) {
        if (!std::isnan(run->eval_acc[i]) && run->eval_acc[i] >= run->threshold) {
          reached = run->epochs[i];
          break;
        }
      }
      conv.epoch = reached;
      epochs_to.push_back(reached ? static_cast<double>(*reached)
                                  : std::numeric_limits<double>::infinity());

      if (!std::isnan(run->final_acc)) final_accs.push_back(run->final_acc);
      conv.final_acc = run->final_acc;

      // Gradient variance over the final half of training.
      if (!run->epochs.empty()) {
        const std::uint64_t half = run->epochs.back() / 2;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < run->epochs.size(); ++i) {
          if (run->epochs[i] > half && !std::isnan(run->grad_variance[i])) {
            sum += run->grad_variance[i];
            ++count;
          }
        }
        conv.grad_variance_final_half = count ? sum / static_cast<double>(count) : kNan;
        if (count) grad_vars.push_back(conv.grad_variance_final_half);
      }
      report.runs.push_back(conv);
    }

    if (!epochs_to.empty()) {
      const double med = lower_median(epochs_to);
      if (std::isfinite(med)) summary.epochs_to_threshold_median = med;
    }
    if (!final_accs.empty()) {
      double mean = 0.0;
      for (double a : final_accs) mean += a;
      mean /= static_cast<double>(final_accs.size());
      double ss = 0.0;
      for (double a : final_accs) ss += (a - mean) * (a - mean);
      summary.final_acc_mean = mean;
      summary.final_acc_std =
          final_accs.size() > 1 ? std::sqrt(ss / static_cast<double>(final_accs.size() - 1)) : 0.0;
    } else {
      summary.final_acc_mean = kNan;
      summary.final_acc_std = kNan;
    }
    if (!grad_vars.empty()) {
      double mean = 0.0;
      for (double v : grad_vars) mean += v;
      summary.grad_variance_final_half = mean / static_cast<double>(grad_vars.size());
    } else {
      summary.grad_variance_final_half = kNan;
    }
    summary.forward_total = n_ok ? fwd / static_cast<double>(n_ok) : kNan;
    summary.backward_total = n_ok ? bwd / static_cast<double>(n_ok) : kNan;

    report.methods.push_back(summary);
  }

  return report;
}

std::string ComparisonReport::render() const {
  const auto cell = [](auto&& fill) {
    std::ostringstream s;
    fill(s);
    return s.str();
  };
  std::ostringstream out;
  out << std::left << std::setw(8) << "method" << std::setw(8) << "alpha" << std::setw(6)
      << "runs" << std::setw(16) << "epochs_to_thr" << std::setw(22) << "final_acc"
      << std::setw(16) << "forward_total" << std::setw(16) << "backward_total"
      << "grad_var_final_half\n";
  for (const MethodSummary& m : methods) {
    const std::string acc = cell([&](std::ostringstream& s) {
      if (std::isnan(m.final_acc_mean)) {
        s << "-";
      } else {
        s << std::fixed << std::setprecision(4) << m.final_acc_mean << " +/- "
          << m.final_acc_std;
      }
    });
    const std::string ep = cell([&](std::ostringstream& s) {
      if (m.epochs_to_threshold_median) {
        s << *m.epochs_to_threshold_median;
      } else {
        s << "-";
      }
    });
    const std::string var = cell([&](std::ostringstream& s) {
      if (std::isnan(m.grad_variance_final_half)) {
        s << "-";
      } else {
        s << std::scientific << std::setprecision(4) << m.grad_variance_final_half;
      }
    });
    const std::string fwd = cell([&](std::ostringstream& s) {
      s << std::fixed << std::setprecision(0) << m.forward_total;
    });
    const std::string bwd = cell([&](std::ostringstream& s) {
      s << std::fixed << std::setprecision(0) << m.backward_total;
    });
    out << std::left << std::setw(8) << m.method << std::setw(8) << m.alpha << std::setw(6)
        << m.runs << std::setw(16) << ep << std::setw(22) << acc << std::setw(16) << fwd
        << std::setw(16) << bwd << var << '\n';
  }
  return out.str();
}

}  // namespace zosam
