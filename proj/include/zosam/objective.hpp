#ifndef ZOSAM_OBJECTIVE_HPP
#define ZOSAM_OBJECTIVE_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zosam/common.hpp"

namespace zosam {

/// One minibatch: row-major inputs (rows x cols) and integer class labels.
struct Batch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> inputs;  // rows * cols, row-major
  std::vector<int> targets;    // length rows

  const double* row(std::size_t i) const { return inputs.data() + i * cols; }
  bool well_formed() const {
    return rows >= 1 && inputs.size() == rows * cols && targets.size() == rows;
  }
};

struct Dataset {
  std::vector<Batch> batches;
  std::size_t n_total = 0;
  std::uint64_t seed = 0;
};

enum class Activation { Tanh, Relu };

enum class ObjectiveKind { Quadratic, Rosenbrock, LogisticRegression, Mlp };

/// A loss over (parameters, batch). Implementations are immutable after
/// construction and safe to evaluate concurrently; evaluation costs are
/// recorded on caller-supplied counters only.
class Objective {
 public:
  virtual ~Objective() = default;

  std::size_t dim() const { return dim_; }
  virtual ObjectiveKind kind() const = 0;
  virtual std::string name() const = 0;

  /// Mean loss over the batch. Counts one forward evaluation.
  /// Throws std::invalid_argument on dimension mismatch, NumericOverflow
  /// if the result is non-finite.
  double eval_loss(const Vec& theta, const Batch& batch, StepCounters* counters = nullptr) const;

  /// Gradient of the batch-mean loss (analytic or reverse-mode). Counts one
  /// backward pass and the forward evaluation it rides on.
  Vec eval_grad(const Vec& theta, const Batch& batch, StepCounters* counters = nullptr) const;

  /// Classification accuracy on the batch; NaN for objectives without labels.
  virtual double accuracy(const Vec& theta, const Batch& batch) const;

  /// Deterministic parameter initialization for a training run.
  virtual Vec init_params(std::uint64_t seed) const;

 protected:
  explicit Objective(std::size_t dim) : dim_(dim) {}
  virtual double loss_impl(const Vec& theta, const Batch& batch) const = 0;
  virtual Vec grad_impl(const Vec& theta, const Batch& batch) const = 0;

 private:
  void check_theta(const Vec& theta) const;
  std::size_t dim_ = 0;
};

/// L(theta) = 1/2 theta'A theta - b'theta with A symmetric positive definite.
/// Ignores the batch; the loss is the same for every sample.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<double> a_row_major, Vec b);
  static QuadraticObjective identity(std::size_t d);
  /// A = diag(1, 2, ..., d).
  static QuadraticObjective linear_spectrum(std::size_t d);

  ObjectiveKind kind() const override { return ObjectiveKind::Quadratic; }
  std::string name() const override { return "quadratic"; }
  const std::vector<double>& matrix() const { return a_; }
  const Vec& offset() const { return b_; }

 protected:
  double loss_impl(const Vec& theta, const Batch& batch) const override;
  Vec grad_impl(const Vec& theta, const Batch& batch) const override;

 private:
  std::vector<double> a_;  // d*d row-major, symmetric positive definite
  Vec b_;
};

class RosenbrockObjective final : public Objective {
 public:
  explicit RosenbrockObjective(std::size_t d);
  ObjectiveKind kind() const override { return ObjectiveKind::Rosenbrock; }
  std::string name() const override { return "rosenbrock"; }

 protected:
  double loss_impl(const Vec& theta, const Batch& batch) const override;
  Vec grad_impl(const Vec& theta, const Batch& batch) const override;
};

/// Linear softmax classifier; parameters are [W (n_classes x in_dim), b].
class LogisticRegressionObjective final : public Objective {
 public:
  LogisticRegressionObjective(std::size_t in_dim, std::size_t n_classes = 2);
  ObjectiveKind kind() const override { return ObjectiveKind::LogisticRegression; }
  std::string name() const override { return "logreg"; }
  double accuracy(const Vec& theta, const Batch& batch) const override;
  Vec init_params(std::uint64_t seed) const override;

 protected:
  double loss_impl(const Vec& theta, const Batch& batch) const override;
  Vec grad_impl(const Vec& theta, const Batch& batch) const override;

 private:
  std::size_t in_dim_;
  std::size_t n_classes_;
};

/// Fully connected classifier with softmax cross-entropy loss. Parameters
/// flatten layer by layer, weights (row-major, out x in) then biases.
class MlpObjective final : public Objective {
 public:
  MlpObjective(std::vector<std::size_t> layer_sizes, Activation activation = Activation::Tanh);
  ObjectiveKind kind() const override { return ObjectiveKind::Mlp; }
  std::string name() const override { return "mlp"; }
  double accuracy(const Vec& theta, const Batch& batch) const override;
  Vec init_params(std::uint64_t seed) const override;
  const std::vector<std::size_t>& layer_sizes() const { return layers_; }
  Activation activation() const { return activation_; }

 protected:
  double loss_impl(const Vec& theta, const Batch& batch) const override;
  Vec grad_impl(const Vec& theta, const Batch& batch) const override;

 private:
  static std::size_t param_count(const std::vector<std::size_t>& layers);
  void forward(const Vec& theta, const double* x, std::vector<Vec>& acts) const;
  std::vector<std::size_t> layers_;
  Activation activation_;
};

/// Central-difference gradient, (L(theta+de_j) - L(theta-de_j)) / (2d) per
/// coordinate. Reference implementation for gradient checks; evaluations are
/// not counted.
Vec finite_diff_grad(const Objective& obj, const Vec& theta, const Batch& batch, double delta);

enum class SyntheticKind { GaussianBlobs, TwoArcs };

/// Deterministic synthetic classification data with balanced classes
/// (counts differ by at most one). Returned as a single batch; see rebatch().
Dataset make_synthetic_dataset(SyntheticKind kind, std::size_t n, std::size_t in_dim,
                               std::size_t n_classes, std::uint64_t seed);

/// All samples of a dataset as one batch, in stored order.
Batch concat(const Dataset& data);

/// Re-slice into consecutive batches of at most batch_size samples.
Dataset rebatch(const Dataset& data, std::size_t batch_size);

/// Select a subset of samples by index (order preserved), as a single batch.
Dataset select(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace zosam

#endif  // ZOSAM_OBJECTIVE_HPP
