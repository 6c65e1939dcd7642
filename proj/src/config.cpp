#include "zosam/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace zosam {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(int line, const std::string& key, const std::string& what) {
  std::ostringstream msg;
  msg << "config: line " << line << ": key '" << key << "': " << what;
  throw ConfigError(msg.str());
}

struct RawEntry {
  std::string value;
  int line;
};

class Fields {
 public:
  Fields(std::map<std::string, RawEntry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string take(const std::string& key, const std::string& fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    seen_.insert(key);
    return it->second.value;
  }

  int line(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void require(const std::string& key) const {
    if (!has(key)) throw ConfigError("config: missing required key '" + key + "'");
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_) {
      if (!seen_.count(key)) fail(entry.line, key, "unknown key");
    }
  }

 private:
  std::map<std::string, RawEntry> entries_;
  std::set<std::string> seen_;
};

double parse_number(Fields& f, const std::string& key, const std::string& fallback) {
  const std::string raw = f.take(key, fallback);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(f.line(key), key, "not a number: '" + raw + "'");
  }
}

std::uint64_t parse_count(Fields& f, const std::string& key, const std::string& fallback) {
  const std::string raw = f.take(key, fallback);
  try {
    if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(f.line(key), key, "not a non-negative integer: '" + raw + "'");
  }
}

bool parse_bool(Fields& f, const std::string& key, const std::string& fallback) {
  const std::string raw = f.take(key, fallback);
  if (raw == "true") return true;
  if (raw == "false") return false;
  fail(f.line(key), key, "expected true or false, got '" + raw + "'");
}

template <typename T>
std::vector<T> parse_list(Fields& f, const std::string& key, const std::string& fallback,
                          T (*one)(const std::string&)) {
  const std::string raw = f.take(key, fallback);
  std::vector<T> out;
  for (const std::string& part : split(raw, ',')) {
    const std::string item = trim(part);
    if (item.empty()) fail(f.line(key), key, "empty list element");
    try {
      out.push_back(one(item));
    } catch (const std::exception& e) {
      fail(f.line(key), key, std::string(e.what()) + ": '" + item + "'");
    }
  }
  return out;
}

std::uint64_t one_u64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("not an integer");
  return v;
}

std::size_t one_size(const std::string& s) { return static_cast<std::size_t>(one_u64(s)); }

OptimizerVariant one_variant(const std::string& s) {
  const auto v = variant_from_name(s);
  if (!v) throw std::invalid_argument("not an optimizer variant");
  return *v;
}

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << xs[i];
  }
  return out.str();
}

std::string join_size(const std::vector<std::size_t>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << xs[i];
  }
  return out.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, RawEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(line_no) + ": empty key");
    }
    if (entries.count(key)) {
      throw ConfigError("config: line " + std::to_string(line_no) + ": key '" + key +
                        "' given twice");
    }
    entries[key] = RawEntry{value, line_no};
  }

  Fields f(std::move(entries));
  f.require("objective");
  f.require("epochs");

  ExperimentConfig cfg;

  cfg.objective = f.take("objective", "");
  if (cfg.objective != "quadratic" && cfg.objective != "rosenbrock" &&
      cfg.objective != "logreg" && cfg.objective != "mlp") {
    fail(f.line("objective"), "objective",
         "expected quadratic, rosenbrock, logreg or mlp, got '" + cfg.objective + "'");
  }

  cfg.quad_dim = static_cast<std::size_t>(parse_count(f, "quad_dim", "10"));
  if (cfg.quad_dim < 1) fail(f.line("quad_dim"), "quad_dim", "must be >= 1");

  {
    const std::string s = f.take("quad_spectrum", "identity");
    if (s == "identity") {
      cfg.quad_spectrum = QuadSpectrum::Identity;
    } else if (s == "linear") {
      cfg.quad_spectrum = QuadSpectrum::Linear;
    } else {
      fail(f.line("quad_spectrum"), "quad_spectrum", "expected identity or linear");
    }
  }

  cfg.rosen_dim = static_cast<std::size_t>(parse_count(f, "rosen_dim", "2"));
  if (cfg.rosen_dim < 2) fail(f.line("rosen_dim"), "rosen_dim", "must be >= 2");

  cfg.mlp_hidden = parse_list<std::size_t>(f, "mlp_hidden", "32,16", one_size);
  for (std::size_t h : cfg.mlp_hidden) {
    if (h < 1) fail(f.line("mlp_hidden"), "mlp_hidden", "layer widths must be >= 1");
  }

  {
    const std::string s = f.take("activation", "tanh");
    if (s == "tanh") {
      cfg.activation = Activation::Tanh;
    } else if (s == "relu") {
      cfg.activation = Activation::Relu;
    } else {
      fail(f.line("activation"), "activation", "expected tanh or relu");
    }
  }

  {
    const std::string s = f.take("dataset", "none");
    if (s == "none") {
      cfg.dataset = DatasetKind::None;
    } else if (s == "gaussian_blobs") {
      cfg.dataset = DatasetKind::GaussianBlobs;
    } else if (s == "two_arcs") {
      cfg.dataset = DatasetKind::TwoArcs;
    } else {
      fail(f.line("dataset"), "dataset", "expected none, gaussian_blobs or two_arcs");
    }
  }

  cfg.n = static_cast<std::size_t>(parse_count(f, "n", "2000"));
  cfg.in_dim = static_cast<std::size_t>(parse_count(f, "in_dim", "2"));
  if (cfg.in_dim < 1) fail(f.line("in_dim"), "in_dim", "must be >= 1");
  cfg.n_classes = static_cast<std::size_t>(parse_count(f, "n_classes", "2"));
  if (cfg.n_classes < 2) fail(f.line("n_classes"), "n_classes", "must be >= 2");
  if (cfg.n < cfg.n_classes) fail(f.line("n"), "n", "must be >= n_classes");
  cfg.batch_size = static_cast<std::size_t>(parse_count(f, "batch_size", "32"));
  if (cfg.batch_size < 1) fail(f.line("batch_size"), "batch_size", "must be >= 1");

  cfg.alpha = parse_number(f, "alpha", "0.9");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) {
    fail(f.line("alpha"), "alpha", "must lie in [0, 1)");
  }

  {
    const std::string s = f.take("mask_init", "random");
    const auto m = mask_init_from_name(s);
    if (!m) fail(f.line("mask_init"), "mask_init", "expected random, magnitude or saliency");
    cfg.mask_init = *m;
  }

  {
    const std::string s = f.take("scheduler", "none");
    if (s == "none") {
      cfg.scheduler = SchedulerKind::None;
    } else if (s == "set") {
      cfg.scheduler = SchedulerKind::Set;
    } else if (s == "rigl") {
      cfg.scheduler = SchedulerKind::Rigl;
    } else {
      fail(f.line("scheduler"), "scheduler", "expected none, set or rigl");
    }
  }

  cfg.zeta = parse_number(f, "zeta", "0.3");
  if (!(cfg.zeta > 0.0 && cfg.zeta < 1.0)) fail(f.line("zeta"), "zeta", "must lie in (0, 1)");
  cfg.scheduler_interval = parse_count(f, "scheduler_interval", "0");

  cfg.variants = parse_list<OptimizerVariant>(f, "variants", "sgd", one_variant);
  if (cfg.variants.empty()) fail(f.line("variants"), "variants", "must not be empty");

  cfg.eta = parse_number(f, "eta", "0.1");
  if (!(cfg.eta > 0.0)) fail(f.line("eta"), "eta", "must be positive");

  {
    const std::string s = f.take("eta_schedule", "cosine");
    if (s == "cosine") {
      cfg.eta_schedule = LrScheduleKind::Cosine;
    } else if (s == "constant") {
      cfg.eta_schedule = LrScheduleKind::Constant;
    } else {
      fail(f.line("eta_schedule"), "eta_schedule", "expected cosine or constant");
    }
  }

  cfg.rho = parse_number(f, "rho", "0.05");
  if (!(cfg.rho >= 0.0)) fail(f.line("rho"), "rho", "must be non-negative");
  cfg.lambda = parse_number(f, "lambda", "5e-4");
  if (!(cfg.lambda >= 0.0)) fail(f.line("lambda"), "lambda", "must be non-negative");

  cfg.rge_m = static_cast<std::size_t>(parse_count(f, "rge_m", "16"));
  if (cfg.rge_m < 1) fail(f.line("rge_m"), "rge_m", "must be >= 1");

  {
    const std::string s = f.take("rge_delta", "auto");
    if (s == "auto") {
      cfg.rge_delta = 0.0;
    } else {
      try {
        std::size_t used = 0;
        cfg.rge_delta = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        fail(f.line("rge_delta"), "rge_delta", "must be a positive number or auto");
      }
      if (!(cfg.rge_delta > 0.0)) {
        fail(f.line("rge_delta"), "rge_delta", "must be a positive number or auto");
      }
    }
  }

  cfg.rge_restrict = parse_bool(f, "rge_restrict", "false");

  cfg.epochs = parse_count(f, "epochs", "0");
  cfg.seeds = parse_list<std::uint64_t>(f, "seeds", "0,1,2,3,4", one_u64);
  if (cfg.seeds.empty()) fail(f.line("seeds"), "seeds", "must not be empty");

  cfg.variance_window = static_cast<std::size_t>(parse_count(f, "variance_window", "20"));
  if (cfg.variance_window < 2) {
    fail(f.line("variance_window"), "variance_window", "must be >= 2");
  }
  cfg.variance_every = parse_count(f, "variance_every", "10");
  if (cfg.variance_every < 1) fail(f.line("variance_every"), "variance_every", "must be >= 1");

  cfg.acc_threshold = parse_number(f, "acc_threshold", "0.9");
  if (!(cfg.acc_threshold >= 0.0 && cfg.acc_threshold <= 1.0)) {
    fail(f.line("acc_threshold"), "acc_threshold", "must lie in [0, 1]");
  }

  cfg.slice_enable = parse_bool(f, "slice_enable", "false");
  cfg.slice_r = parse_number(f, "slice_r", "1");
  if (!(cfg.slice_r > 0.0)) fail(f.line("slice_r"), "slice_r", "must be positive");
  cfg.slice_grid = static_cast<std::size_t>(parse_count(f, "slice_grid", "41"));
  if (cfg.slice_grid < 3 || cfg.slice_grid % 2 == 0) {
    fail(f.line("slice_grid"), "slice_grid", "must be odd and >= 3");
  }
  cfg.slice_dirs = static_cast<std::size_t>(parse_count(f, "slice_dirs", "1"));
  if (cfg.slice_dirs != 1 && cfg.slice_dirs != 2) {
    fail(f.line("slice_dirs"), "slice_dirs", "must be 1 or 2");
  }
  cfg.slice_seed = parse_count(f, "slice_seed", "0");

  f.reject_unknown();

  // Cross-field checks.
  if ((cfg.objective == "logreg" || cfg.objective == "mlp") && cfg.dataset == DatasetKind::None) {
    throw ConfigError("config: key 'dataset': objective '" + cfg.objective +
                      "' needs a synthetic dataset");
  }
  if (cfg.dataset == DatasetKind::TwoArcs && cfg.n_classes != 2) {
    fail(f.line("n_classes"), "n_classes", "two_arcs is a 2-class dataset");
  }

  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "objective=" << cfg.objective << '\n';
  out << "quad_dim=" << cfg.quad_dim << '\n';
  out << "quad_spectrum=" << (cfg.quad_spectrum == QuadSpectrum::Identity ? "identity" : "linear")
      << '\n';
  out << "rosen_dim=" << cfg.rosen_dim << '\n';
  out << "mlp_hidden=" << join_size(cfg.mlp_hidden) << '\n';
  out << "activation=" << (cfg.activation == Activation::Tanh ? "tanh" : "relu") << '\n';
  out << "dataset="
      << (cfg.dataset == DatasetKind::None
              ? "none"
              : cfg.dataset == DatasetKind::GaussianBlobs ? "gaussian_blobs" : "two_arcs")
      << '\n';
  out << "n=" << cfg.n << '\n';
  out << "in_dim=" << cfg.in_dim << '\n';
  out << "n_classes=" << cfg.n_classes << '\n';
  out << "batch_size=" << cfg.batch_size << '\n';
  out << "alpha=" << format_double(cfg.alpha) << '\n';
  out << "mask_init=" << mask_init_name(cfg.mask_init) << '\n';
  out << "scheduler="
      << (cfg.scheduler == SchedulerKind::None ? "none"
                                               : cfg.scheduler == SchedulerKind::Set ? "set"
                                                                                     : "rigl")
      << '\n';
  out << "zeta=" << format_double(cfg.zeta) << '\n';
  out << "scheduler_interval=" << cfg.scheduler_interval << '\n';
  out << "variants=";
  for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
    if (i) out << ',';
    out << variant_name(cfg.variants[i]);
  }
  out << '\n';
  out << "eta=" << format_double(cfg.eta) << '\n';
  out << "eta_schedule=" << (cfg.eta_schedule == LrScheduleKind::Cosine ? "cosine" : "constant")
      << '\n';
  out << "rho=" << format_double(cfg.rho) << '\n';
  out << "lambda=" << format_double(cfg.lambda) << '\n';
  out << "rge_m=" << cfg.rge_m << '\n';
  if (cfg.rge_delta > 0.0) {
    out << "rge_delta=" << format_double(cfg.rge_delta) << '\n';
  } else {
    out << "rge_delta=auto\n";
  }
  out << "rge_restrict=" << (cfg.rge_restrict ? "true" : "false") << '\n';
  out << "epochs=" << cfg.epochs << '\n';
  out << "seeds=" << join_u64(cfg.seeds) << '\n';
  out << "variance_window=" << cfg.variance_window << '\n';
  out << "variance_every=" << cfg.variance_every << '\n';
  out << "acc_threshold=" << format_double(cfg.acc_threshold) << '\n';
  out << "slice_enable=" << (cfg.slice_enable ? "true" : "false") << '\n';
  out << "slice_r=" << format_double(cfg.slice_r) << '\n';
  out << "slice_grid=" << cfg.slice_grid << '\n';
  out << "slice_dirs=" << cfg.slice_dirs << '\n';
  out << "slice_seed=" << cfg.slice_seed << '\n';
  return out.str();
}

std::unique_ptr<Objective> make_objective(const ExperimentConfig& cfg) {
  if (cfg.objective == "quadratic") {
    return std::make_unique<QuadraticObjective>(
        cfg.quad_spectrum == QuadSpectrum::Identity
            ? QuadraticObjective::identity(cfg.quad_dim)
            : QuadraticObjective::linear_spectrum(cfg.quad_dim));
  }
  if (cfg.objective == "rosenbrock") {
    return std::make_unique<RosenbrockObjective>(cfg.rosen_dim);
  }
  if (cfg.objective == "logreg") {
    return std::make_unique<LogisticRegressionObjective>(cfg.in_dim, cfg.n_classes);
  }
  std::vector<std::size_t> layers;
  layers.push_back(cfg.in_dim);
  layers.insert(layers.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
  layers.push_back(cfg.n_classes);
  return std::make_unique<MlpObjective>(std::move(layers), cfg.activation);
}

OptimizerConfig make_optimizer_config(const ExperimentConfig& cfg, OptimizerVariant variant) {
  OptimizerConfig opt;
  opt.variant = variant;
  opt.eta.kind = cfg.eta_schedule;
  opt.eta.base = cfg.eta;
  opt.eta.total_steps = 0;  // stamped by train()
  opt.rho = cfg.rho;
  opt.lambda = cfg.lambda;
  opt.rge.m = cfg.rge_m;
  opt.rge.restrict_to_support = cfg.rge_restrict;
  if (cfg.rge_delta > 0.0) {
    opt.rge.delta = cfg.rge_delta;
    opt.rge_delta_auto = false;
  } else {
    opt.rge_delta_auto = true;
  }
  return opt;
}

std::optional<GrowPruneConfig> make_scheduler_config(const ExperimentConfig& cfg) {
  if (cfg.scheduler == SchedulerKind::None) return std::nullopt;
  GrowPruneConfig g;
  g.zeta = cfg.zeta;
  g.interval = cfg.scheduler_interval;
  g.grow_rule = cfg.scheduler == SchedulerKind::Set ? GrowRule::Random : GrowRule::GradMagnitude;
  return g;
}

}  // namespace zosam
