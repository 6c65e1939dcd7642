#include "zosam/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace zosam {

namespace {

// Softmax cross-entropy with max subtraction; logits length C.
double softmax_xent(const double* logits, std::size_t n_classes, int target, double* probs) {
  double mx = logits[0];
  for (std::size_t c = 1; c < n_classes; ++c) mx = std::max(mx, logits[c]);
  double z = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    probs[c] = std::exp(logits[c] - mx);
    z += probs[c];
  }
  for (std::size_t c = 0; c < n_classes; ++c) probs[c] /= z;
  return std::log(z) - (logits[static_cast<std::size_t>(target)] - mx);
}

int argmax_class(const double* logits, std::size_t n_classes) {
  int best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (logits[c] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

void check_targets(const Batch& batch, std::size_t n_classes, const std::string& who) {
  if (!batch.well_formed()) throw std::invalid_argument(who + ": malformed batch");
  for (int t : batch.targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= n_classes) {
      throw std::invalid_argument(who + ": target out of range");
    }
  }
}

}  // namespace

void Objective::check_theta(const Vec& theta) const {
  if (theta.size() != dim_) {
    throw std::invalid_argument(name() + ": parameter length " + std::to_string(theta.size()) +
                                " does not match dimension " + std::to_string(dim_));
  }
}

double Objective::eval_loss(const Vec& theta, const Batch& batch, StepCounters* counters) const {
  check_theta(theta);
  const double value = loss_impl(theta, batch);
  if (!std::isfinite(value)) {
    throw NumericOverflow(name() + ": non-finite loss");
  }
  count_forward(counters);
  return value;
}

Vec Objective::eval_grad(const Vec& theta, const Batch& batch, StepCounters* counters) const {
  check_theta(theta);
  Vec g = grad_impl(theta, batch);
  if (!all_finite(g)) {
    throw NumericOverflow(name() + ": non-finite gradient");
  }
  count_forward(counters);
  count_backward(counters);
  return g;
}

double Objective::accuracy(const Vec&, const Batch&) const {
  return std::numeric_limits<double>::quiet_NaN();
}

Vec Objective::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec theta(dim());
  for (double& x : theta) x = normal(rng);
  return theta;
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticObjective::QuadraticObjective(std::vector<double> a_row_major, Vec b)
    : Objective(b.size()), a_(std::move(a_row_major)), b_(std::move(b)) {
  const std::size_t d = b_.size();
  if (a_.size() != d * d) throw std::invalid_argument("quadratic: A must be d x d");
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (a_[i * d + j] != a_[j * d + i]) {
        throw std::invalid_argument("quadratic: A must be symmetric");
      }
    }
  }
}

QuadraticObjective QuadraticObjective::identity(std::size_t d) {
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = 1.0;
  return QuadraticObjective(std::move(a), Vec(d, 0.0));
}

QuadraticObjective QuadraticObjective::linear_spectrum(std::size_t d) {
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = static_cast<double>(i + 1);
  return QuadraticObjective(std::move(a), Vec(d, 0.0));
}

double QuadraticObjective::loss_impl(const Vec& theta, const Batch&) const {
  const std::size_t d = dim();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += a_[i * d + j] * theta[j];
    quad += theta[i] * row;
  }
  return 0.5 * quad - dot(b_, theta);
}

Vec QuadraticObjective::grad_impl(const Vec& theta, const Batch&) const {
  const std::size_t d = dim();
  Vec g(d);
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += a_[i * d + j] * theta[j];
    g[i] = row - b_[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Rosenbrock

RosenbrockObjective::RosenbrockObjective(std::size_t d) : Objective(d) {
  if (d < 2) throw std::invalid_argument("rosenbrock: dimension must be >= 2");
}

double RosenbrockObjective::loss_impl(const Vec& theta, const Batch&) const {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
    const double a = theta[i + 1] - theta[i] * theta[i];
    const double b = 1.0 - theta[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

Vec RosenbrockObjective::grad_impl(const Vec& theta, const Batch&) const {
  const std::size_t d = theta.size();
  Vec g(d, 0.0);
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double a = theta[i + 1] - theta[i] * theta[i];
    g[i] += -400.0 * theta[i] * a - 2.0 * (1.0 - theta[i]);
    g[i + 1] += 200.0 * a;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegressionObjective::LogisticRegressionObjective(std::size_t in_dim, std::size_t n_classes)
    : Objective(n_classes * in_dim + n_classes), in_dim_(in_dim), n_classes_(n_classes) {
  if (in_dim < 1 || n_classes < 2) {
    throw std::invalid_argument("logreg: need in_dim >= 1 and n_classes >= 2");
  }
}

double LogisticRegressionObjective::loss_impl(const Vec& theta, const Batch& batch) const {
  check_targets(batch, n_classes_, name());
  if (batch.cols != in_dim_) throw std::invalid_argument("logreg: batch width mismatch");
  const double* w = theta.data();
  const double* b = theta.data() + n_classes_ * in_dim_;
  std::vector<double> logits(n_classes_), probs(n_classes_);
  double total = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* x = batch.row(r);
    for (std::size_t c = 0; c < n_classes_; ++c) {
      double z = b[c];
      const double* wc = w + c * in_dim_;
      for (std::size_t j = 0; j < in_dim_; ++j) z += wc[j] * x[j];
      logits[c] = z;
    }
    total += softmax_xent(logits.data(), n_classes_, batch.targets[r], probs.data());
  }
  return total / static_cast<double>(batch.rows);
}

Vec LogisticRegressionObjective::grad_impl(const Vec& theta, const Batch& batch) const {
  check_targets(batch, n_classes_, name());
  if (batch.cols != in_dim_) throw std::invalid_argument("logreg: batch width mismatch");
  const double* w = theta.data();
  const double* b = theta.data() + n_classes_ * in_dim_;
  Vec g(dim(), 0.0);
  double* gw = g.data();
  double* gb = g.data() + n_classes_ * in_dim_;
  std::vector<double> logits(n_classes_), probs(n_classes_);
  const double inv_n = 1.0 / static_cast<double>(batch.rows);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* x = batch.row(r);
    for (std::size_t c = 0; c < n_classes_; ++c) {
      double z = b[c];
      const double* wc = w + c * in_dim_;
      for (std::size_t j = 0; j < in_dim_; ++j) z += wc[j] * x[j];
      logits[c] = z;
    }
    softmax_xent(logits.data(), n_classes_, batch.targets[r], probs.data());
    for (std::size_t c = 0; c < n_classes_; ++c) {
      const double dz = (probs[c] - (static_cast<int>(c) == batch.targets[r] ? 1.0 : 0.0)) * inv_n;
      double* gwc = gw + c * in_dim_;
      for (std::size_t j = 0; j < in_dim_; ++j) gwc[j] += dz * x[j];
      gb[c] += dz;
    }
  }
  return g;
}

double LogisticRegressionObjective::accuracy(const Vec& theta, const Batch& batch) const {
  check_targets(batch, n_classes_, name());
  const double* w = theta.data();
  const double* b = theta.data() + n_classes_ * in_dim_;
  std::vector<double> logits(n_classes_);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* x = batch.row(r);
    for (std::size_t c = 0; c < n_classes_; ++c) {
      double z = b[c];
      const double* wc = w + c * in_dim_;
      for (std::size_t j = 0; j < in_dim_; ++j) z += wc[j] * x[j];
      logits[c] = z;
    }
    if (argmax_class(logits.data(), n_classes_) == batch.targets[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.rows);
}

Vec LogisticRegressionObjective::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.01);
  Vec theta(dim());
  for (double& x : theta) x = normal(rng);
  return theta;
}

// ---------------------------------------------------------------------------
// MLP

std::size_t MlpObjective::param_count(const std::vector<std::size_t>& layers) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l] * layers[l + 1] + layers[l + 1];
  return n;
}

MlpObjective::MlpObjective(std::vector<std::size_t> layer_sizes, Activation activation)
    : Objective(param_count(layer_sizes)), layers_(std::move(layer_sizes)), activation_(activation) {
  if (layers_.size() < 2) throw std::invalid_argument("mlp: need at least input and output layers");
  for (std::size_t s : layers_) {
    if (s == 0) throw std::invalid_argument("mlp: zero-width layer");
  }
  if (layers_.back() < 2) throw std::invalid_argument("mlp: need at least 2 output classes");
}

// acts[0] is the input copy; acts[l+1] holds post-activation of layer l
// (final layer stays linear).
void MlpObjective::forward(const Vec& theta, const double* x, std::vector<Vec>& acts) const {
  const std::size_t n_layers = layers_.size() - 1;
  acts.resize(n_layers + 1);
  acts[0].assign(x, x + layers_[0]);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = layers_[l];
    const std::size_t out = layers_[l + 1];
    const double* w = theta.data() + off;
    const double* b = theta.data() + off + out * in;
    acts[l + 1].resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* wo = w + o * in;
      const double* a = acts[l].data();
      for (std::size_t j = 0; j < in; ++j) z += wo[j] * a[j];
      if (l + 1 < n_layers) {
        z = activation_ == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
      }
      acts[l + 1][o] = z;
    }
    off += out * in + out;
  }
}

double MlpObjective::loss_impl(const Vec& theta, const Batch& batch) const {
  const std::size_t n_classes = layers_.back();
  check_targets(batch, n_classes, name());
  if (batch.cols != layers_.front()) throw std::invalid_argument("mlp: batch width mismatch");
  std::vector<Vec> acts;
  std::vector<double> probs(n_classes);
  double total = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    forward(theta, batch.row(r), acts);
    total += softmax_xent(acts.back().data(), n_classes, batch.targets[r], probs.data());
  }
  return total / static_cast<double>(batch.rows);
}

Vec MlpObjective::grad_impl(const Vec& theta, const Batch& batch) const {
  const std::size_t n_classes = layers_.back();
  check_targets(batch, n_classes, name());
  if (batch.cols != layers_.front()) throw std::invalid_argument("mlp: batch width mismatch");
  const std::size_t n_layers = layers_.size() - 1;
  Vec g(dim(), 0.0);
  std::vector<Vec> acts;
  std::vector<double> probs(n_classes);
  std::vector<Vec> delta(n_layers);
  const double inv_n = 1.0 / static_cast<double>(batch.rows);

  // Per-layer parameter offsets.
  std::vector<std::size_t> offsets(n_layers);
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      offsets[l] = off;
      off += layers_[l] * layers_[l + 1] + layers_[l + 1];
    }
  }

  for (std::size_t r = 0; r < batch.rows; ++r) {
    forward(theta, batch.row(r), acts);
    softmax_xent(acts.back().data(), n_classes, batch.targets[r], probs.data());

    delta[n_layers - 1].resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      delta[n_layers - 1][c] =
          (probs[c] - (static_cast<int>(c) == batch.targets[r] ? 1.0 : 0.0)) * inv_n;
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t in = layers_[l];
      const std::size_t out = layers_[l + 1];
      const double* w = theta.data() + offsets[l];
      double* gw = g.data() + offsets[l];
      double* gb = g.data() + offsets[l] + out * in;
      const Vec& a_in = acts[l];
      const Vec& dz = delta[l];

      for (std::size_t o = 0; o < out; ++o) {
        const double d = dz[o];
        double* gwo = gw + o * in;
        for (std::size_t j = 0; j < in; ++j) gwo[j] += d * a_in[j];
        gb[o] += d;
      }

      if (l > 0) {
        delta[l - 1].assign(in, 0.0);
        Vec& prev = delta[l - 1];
        for (std::size_t o = 0; o < out; ++o) {
          const double d = dz[o];
          const double* wo = w + o * in;
          for (std::size_t j = 0; j < in; ++j) prev[j] += d * wo[j];
        }
        // Activation derivative of the producing layer.
        const Vec& a = acts[l];
        for (std::size_t j = 0; j < in; ++j) {
          if (activation_ == Activation::Tanh) {
            prev[j] *= 1.0 - a[j] * a[j];
          } else {
            prev[j] *= a[j] > 0.0 ? 1.0 : 0.0;
          }
        }
      }
    }
  }
  return g;
}

double MlpObjective::accuracy(const Vec& theta, const Batch& batch) const {
  const std::size_t n_classes = layers_.back();
  check_targets(batch, n_classes, name());
  std::vector<Vec> acts;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    forward(theta, batch.row(r), acts);
    if (argmax_class(acts.back().data(), n_classes) == batch.targets[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.rows);
}

Vec MlpObjective::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Vec theta(dim(), 0.0);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const std::size_t in = layers_[l];
    const std::size_t out = layers_[l + 1];
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    for (std::size_t i = 0; i < out * in + out; ++i) theta[off + i] = normal(rng);
    off += out * in + out;
  }
  return theta;
}

// ---------------------------------------------------------------------------

Vec finite_diff_grad(const Objective& obj, const Vec& theta, const Batch& batch, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("finite_diff_grad: delta must be positive");
  Vec g(theta.size());
  Vec probe = theta;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + delta;
    const double up = obj.eval_loss(probe, batch);
    probe[j] = saved - delta;
    const double down = obj.eval_loss(probe, batch);
    probe[j] = saved;
    g[j] = (up - down) / (2.0 * delta);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset make_synthetic_dataset(SyntheticKind kind, std::size_t n, std::size_t in_dim,
                               std::size_t n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("make_synthetic_dataset: need n_classes >= 2");
  if (n < n_classes) throw std::invalid_argument("make_synthetic_dataset: need n >= n_classes");
  if (in_dim < 1) throw std::invalid_argument("make_synthetic_dataset: need in_dim >= 1");
  if (kind == SyntheticKind::TwoArcs && n_classes != 2) {
    throw std::invalid_argument("make_synthetic_dataset: two_arcs is a 2-class dataset");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Batch batch;
  batch.rows = n;
  batch.cols = in_dim;
  batch.inputs.resize(n * in_dim);
  batch.targets.resize(n);

  // Balanced labels in round-robin order, then a seeded shuffle of rows.
  for (std::size_t i = 0; i < n; ++i) batch.targets[i] = static_cast<int>(i % n_classes);

  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    double* x = &batch.inputs[i * in_dim];
    const int cls = batch.targets[i];
    if (kind == SyntheticKind::GaussianBlobs) {
      // Class centers on a circle of radius 1.8 in the first two coordinates
      // (a line when in_dim == 1); remaining coordinates carry unit noise.
      const double angle = 2.0 * kPi * cls / static_cast<double>(n_classes) + kPi / 4.0;
      const double radius = 1.8;
      for (std::size_t j = 0; j < in_dim; ++j) x[j] = normal(rng);
      if (in_dim == 1) {
        x[0] += radius * (2.0 * cls / static_cast<double>(n_classes - 1) - 1.0);
      } else {
        x[0] += radius * std::cos(angle);
        x[1] += radius * std::sin(angle);
      }
    } else {
      // Two interleaved arcs with Gaussian jitter.
      const double t = kPi * uniform(rng);
      double ax, ay;
      if (cls == 0) {
        ax = std::cos(t);
        ay = std::sin(t);
      } else {
        ax = 1.0 - std::cos(t);
        ay = 0.5 - std::sin(t);
      }
      for (std::size_t j = 0; j < in_dim; ++j) x[j] = 0.15 * normal(rng);
      x[0] += 2.0 * ax;
      if (in_dim >= 2) x[1] += 2.0 * ay;
    }
  }

  // Shuffle rows so batches are class-mixed.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Batch shuffled = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    shuffled.targets[i] = batch.targets[src];
    std::copy(batch.row(src), batch.row(src) + in_dim, &shuffled.inputs[i * in_dim]);
  }

  Dataset data;
  data.batches.push_back(std::move(shuffled));
  data.n_total = n;
  data.seed = seed;
  return data;
}

Batch concat(const Dataset& data) {
  Batch out;
  if (data.batches.empty()) return out;
  out.cols = data.batches.front().cols;
  out.rows = 0;
  for (const Batch& b : data.batches) {
    out.rows += b.rows;
    out.inputs.insert(out.inputs.end(), b.inputs.begin(), b.inputs.end());
    out.targets.insert(out.targets.end(), b.targets.begin(), b.targets.end());
  }
  return out;
}

Dataset rebatch(const Dataset& data, std::size_t batch_size) {
  if (batch_size < 1) throw std::invalid_argument("rebatch: batch_size must be >= 1");
  Batch all = concat(data);
  Dataset out;
  out.n_total = data.n_total;
  out.seed = data.seed;
  for (std::size_t start = 0; start < all.rows; start += batch_size) {
    const std::size_t count = std::min(batch_size, all.rows - start);
    Batch b;
    b.rows = count;
    b.cols = all.cols;
    b.inputs.assign(all.inputs.begin() + start * all.cols,
                    all.inputs.begin() + (start + count) * all.cols);
    b.targets.assign(all.targets.begin() + start, all.targets.begin() + start + count);
    out.batches.push_back(std::move(b));
  }
  return out;
}

Dataset select(const Dataset& data, const std::vector<std::size_t>& indices) {
  Batch all = concat(data);
  Batch b;
  b.rows = indices.size();
  b.cols = all.cols;
  b.inputs.resize(b.rows * b.cols);
  b.targets.resize(b.rows);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= all.rows) throw std::invalid_argument("select: index out of range");
    std::copy(all.row(src), all.row(src) + all.cols, &b.inputs[i * b.cols]);
    b.targets[i] = all.targets[src];
  }
  Dataset out;
  out.n_total = b.rows;
  out.seed = data.seed;
  out.batches.push_back(std::move(b));
  return out;
}

}  // namespace zosam
