#ifndef ZOSAM_COMMON_HPP
#define ZOSAM_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace zosam {

/// Flat parameter vector; every model in the library is a point in R^d.
using Vec = std::vector<double>;

/// Thrown when an evaluation produces a non-finite value.
class NumericOverflow : public std::runtime_error {
 public:
  explicit NumericOverflow(const std::string& what) : std::runtime_error(what) {}
};

/// Forward/backward evaluation counters. Owned by the caller; library
/// operations only increment through a pointer so pure evaluations stay
/// stateless and diagnostics can opt out of the books.
struct StepCounters {
  std::uint64_t forward_evals = 0;
  std::uint64_t backward_passes = 0;

  friend bool operator==(const StepCounters&, const StepCounters&) = default;
};

inline void count_forward(StepCounters* c, std::uint64_t n = 1) {
  if (c) c->forward_evals += n;
}
inline void count_backward(StepCounters* c, std::uint64_t n = 1) {
  if (c) c->backward_passes += n;
}

/// splitmix64 finalizer; used to derive independent sub-seeds from
/// (seed, salt) pairs so results never depend on evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Salts for the independent random streams of one run.
inline constexpr std::uint64_t kSaltInit = 0x01;
inline constexpr std::uint64_t kSaltMask = 0x02;
inline constexpr std::uint64_t kSaltData = 0x03;
inline constexpr std::uint64_t kSaltSplit = 0x04;
inline constexpr std::uint64_t kSaltBatchOrder = 0x05;
inline constexpr std::uint64_t kSaltGrow = 0x06;
inline constexpr std::uint64_t kSaltRge = 0x07;

inline std::uint64_t fnv1a64(const void* data, std::size_t n_bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n_bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_vec(const Vec& v) {
  return v.empty() ? fnv1a64(nullptr, 0) : fnv1a64(v.data(), v.size() * sizeof(double));
}

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

/// Shortest round-trip-exact decimal form, deterministic across runs.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace zosam

#endif  // ZOSAM_COMMON_HPP
