#ifndef ZOSAM_MASK_HPP
#define ZOSAM_MASK_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zosam/common.hpp"
#include "zosam/objective.hpp"

namespace zosam {

/// Binary support mask over a flat parameter vector. Generators and
/// schedulers always return masks with population count exactly budget_k;
/// the type itself tolerates fewer ones (useful for edge-case tests).
struct Mask {
  std::vector<std::uint8_t> bits;  // 0/1 entries, length d
  std::size_t budget_k = 0;

  Mask() = default;
  Mask(std::size_t d, std::size_t k) : bits(d, 0), budget_k(k) {}

  std::size_t size() const { return bits.size(); }
  std::size_t popcount() const;
  bool active(std::size_t j) const { return bits[j] != 0; }
  std::uint64_t checksum() const;

  static Mask all_ones(std::size_t d);

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Target sparsity fraction alpha in [0,1); the active budget is
/// k = round((1-alpha)*d), clamped to at least one coordinate.
struct SparsitySpec {
  double alpha = 0.0;
  std::size_t d = 0;

  SparsitySpec(double alpha_, std::size_t d_);
  std::size_t k() const { return k_; }

 private:
  std::size_t k_;
};

enum class GrowRule { Random, GradMagnitude };

/// Prune-and-grow schedule: every `interval` steps, replace
/// floor(zeta * k) of the active coordinates.
struct GrowPruneConfig {
  double zeta = 0.3;             // fraction of active weights replaced, in (0,1)
  std::uint64_t interval = 1;    // steps between mask updates, >= 1
  GrowRule grow_rule = GrowRule::Random;
};

struct MaskUpdate {
  Mask mask;
  std::vector<std::size_t> grown;  // coordinates activated by this update
};

/// Elementwise product theta * mask; inputs untouched.
Vec apply_mask(const Vec& theta, const Mask& mask);

/// Exactly k ones at positions drawn uniformly without replacement.
Mask random_mask(std::size_t d, std::size_t k, std::uint64_t seed);

/// Ones at the k largest |theta_j|; ties broken toward the lower index.
Mask magnitude_mask(const Vec& theta, std::size_t k);

/// Ones at the k largest |grad_j * theta_j| scores; consumes one backward
/// pass on the supplied counters.
Mask saliency_mask(const Objective& obj, const Vec& theta, const Batch& batch, std::size_t k,
                   StepCounters* counters = nullptr);

/// Deactivate the floor(zeta*k) smallest-|theta| active coordinates and
/// activate as many previously inactive ones, chosen uniformly. Never grows
/// a coordinate pruned in the same call.
MaskUpdate set_prune_grow(const Vec& theta, const Mask& mask, const GrowPruneConfig& cfg,
                          std::uint64_t seed);

/// Same pruning rule, but grow the inactive coordinates with the largest
/// |dense_grad_j|; ties toward the lower index.
MaskUpdate rigl_prune_grow(const Vec& theta, const Mask& mask, const Vec& dense_grad,
                           const GrowPruneConfig& cfg);

/// Plain-text form: first line "d k", second line the bits space-separated.
std::string mask_to_text(const Mask& mask);
Mask mask_from_text(const std::string& text);

}  // namespace zosam

#endif  // ZOSAM_MASK_HPP
