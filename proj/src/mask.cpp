#include "zosam/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace zosam {

namespace {

void check_budget(std::size_t d, std::size_t k, const char* who) {
  if (k < 1 || k > d) {
    throw std::invalid_argument(std::string(who) + ": budget k must satisfy 1 <= k <= d");
  }
}

// Indices of the k largest scores; equal scores resolve toward lower indices.
std::vector<std::size_t> top_k_indices(const Vec& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

// Draw `count` elements from `pool` uniformly without replacement (partial
// Fisher-Yates); order of the result is the draw order.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool,
                                                    std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

std::size_t Mask::popcount() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits) n += b;
  return n;
}

std::uint64_t Mask::checksum() const {
  return bits.empty() ? fnv1a64(nullptr, 0) : fnv1a64(bits.data(), bits.size());
}

Mask Mask::all_ones(std::size_t d) {
  Mask m(d, d);
  std::fill(m.bits.begin(), m.bits.end(), std::uint8_t{1});
  return m;
}

SparsitySpec::SparsitySpec(double alpha_, std::size_t d_) : alpha(alpha_), d(d_) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("sparsity: alpha must lie in [0, 1)");
  }
  if (d < 1) throw std::invalid_argument("sparsity: dimension must be >= 1");
  const auto rounded = static_cast<long long>(std::llround((1.0 - alpha) * static_cast<double>(d)));
  k_ = static_cast<std::size_t>(std::clamp<long long>(rounded, 1, static_cast<long long>(d)));
}

Vec apply_mask(const Vec& theta, const Mask& mask) {
  if (theta.size() != mask.size()) {
    throw std::invalid_argument("apply_mask: length mismatch");
  }
  Vec out(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    out[j] = mask.bits[j] ? theta[j] : 0.0;
  }
  return out;
}

Mask random_mask(std::size_t d, std::size_t k, std::uint64_t seed) {
  check_budget(d, k, "random_mask");
  std::vector<std::size_t> pool(d);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Mask m(d, k);
  for (std::size_t j : sample_without_replacement(std::move(pool), k, seed)) m.bits[j] = 1;
  return m;
}

Mask magnitude_mask(const Vec& theta, std::size_t k) {
  check_budget(theta.size(), k, "magnitude_mask");
  Vec scores(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) scores[j] = std::abs(theta[j]);
  Mask m(theta.size(), k);
  for (std::size_t j : top_k_indices(scores, k)) m.bits[j] = 1;
  return m;
}

Mask saliency_mask(const Objective& obj, const Vec& theta, const Batch& batch, std::size_t k,
                   StepCounters* counters) {
  check_budget(obj.dim(), k, "saliency_mask");
  const Vec g = obj.eval_grad(theta, batch, counters);
  Vec scores(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) scores[j] = std::abs(g[j] * theta[j]);
  Mask m(theta.size(), k);
  for (std::size_t j : top_k_indices(scores, k)) m.bits[j] = 1;
  return m;
}

namespace {

// Shared pruning stage: returns (kept mask, inactive pool before the call).
struct PruneResult {
  Mask mask;
  std::vector<std::size_t> inactive_before;
  std::size_t p = 0;
};

PruneResult prune_smallest(const Vec& theta, const Mask& mask, double zeta, const char* who) {
  if (theta.size() != mask.size()) {
    throw std::invalid_argument(std::string(who) + ": length mismatch");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument(std::string(who) + ": zeta must lie in (0, 1)");
  }
  PruneResult res;
  res.mask = mask;

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask.active(j)) {
      active.push_back(j);
    } else {
      res.inactive_before.push_back(j);
    }
  }
  res.p = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(active.size())));
  if (res.p > res.inactive_before.size()) {
    throw std::invalid_argument(std::string(who) + ": not enough inactive coordinates to grow");
  }

  // Smallest |theta| first, ties toward the lower index.
  std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(theta[a]) < std::abs(theta[b]);
  });
  for (std::size_t i = 0; i < res.p; ++i) res.mask.bits[active[i]] = 0;
  return res;
}

}  // namespace

MaskUpdate set_prune_grow(const Vec& theta, const Mask& mask, const GrowPruneConfig& cfg,
                          std::uint64_t seed) {
  if (cfg.grow_rule != GrowRule::Random) {
    throw std::invalid_argument("set_prune_grow: expects the random grow rule");
  }
  PruneResult pruned = prune_smallest(theta, mask, cfg.zeta, "set_prune_grow");
  MaskUpdate update;
  update.grown = sample_without_replacement(std::move(pruned.inactive_before), pruned.p, seed);
  update.mask = std::move(pruned.mask);
  for (std::size_t j : update.grown) update.mask.bits[j] = 1;
  return update;
}

MaskUpdate rigl_prune_grow(const Vec& theta, const Mask& mask, const Vec& dense_grad,
                           const GrowPruneConfig& cfg) {
  if (cfg.grow_rule != GrowRule::GradMagnitude) {
    throw std::invalid_argument("rigl_prune_grow: expects the gradient-magnitude grow rule");
  }
  if (dense_grad.size() != mask.size()) {
    throw std::invalid_argument("rigl_prune_grow: gradient length mismatch");
  }
  PruneResult pruned = prune_smallest(theta, mask, cfg.zeta, "rigl_prune_grow");

  // Largest |dense_grad| among the previously inactive coordinates.
  std::vector<std::size_t>& pool = pruned.inactive_before;
  std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(dense_grad[a]) > std::abs(dense_grad[b]);
  });
  pool.resize(pruned.p);

  MaskUpdate update;
  update.grown = std::move(pool);
  update.mask = std::move(pruned.mask);
  for (std::size_t j : update.grown) update.mask.bits[j] = 1;
  return update;
}

std::string mask_to_text(const Mask& mask) {
  std::ostringstream out;
  out << mask.size() << ' ' << mask.budget_k << '\n';
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (j) out << ' ';
    out << static_cast<int>(mask.bits[j]);
  }
  out << '\n';
  return out.str();
}

Mask mask_from_text(const std::string& text) {
  std::istringstream in(text);
  std::size_t d = 0, k = 0;
  if (!(in >> d >> k)) throw std::invalid_argument("mask_from_text: bad header line");
  Mask m(d, k);
  for (std::size_t j = 0; j < d; ++j) {
    int bit = 0;
    if (!(in >> bit) || (bit != 0 && bit != 1)) {
      throw std::invalid_argument("mask_from_text: bad bit at position " + std::to_string(j));
    }
    m.bits[j] = static_cast<std::uint8_t>(bit);
  }
  return m;
}

}  // namespace zosam
