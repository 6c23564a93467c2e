#pragma once

// Exact functionals of sampled families: rho-variation, oscillation, lambda-jumps,
// upcrossings, and the short/long scale split.
//
// Families are stored in grid order (decreasing eps). Every supremum runs over the
// sampled grid, so each result is a lower bound for the continuum quantity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lipvar/core.hpp"
#include "lipvar/transforms.hpp"

namespace lipvar::variation {

using transforms::SampledFamily;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VariationResult {
  double value = 0.0;
  std::vector<std::size_t> subsequence;  // grid indices, increasing
};

namespace detail {

inline double power_term(double diff, double rho) {
  const double a = std::abs(diff);
  if (rho == 1.0) return a;
  if (rho == 2.0) return a * a;
  return std::pow(a, rho);
}

}  // namespace detail

/// sup over index subsequences of (sum |v_{i_{k+1}} - v_{i_k}|^rho)^{1/rho}, by the O(N^2)
/// program best[i] = max(0, max_{j<i} best[j] + |v_i - v_j|^rho). rho = inf gives max - min.
inline VariationResult rho_variation(std::span<const double> values, double rho) {
  if (!(rho >= 1.0)) throw InvalidArgument("rho_variation: rho must be >= 1");
  VariationResult res;
  const std::size_t n = values.size();
  if (n == 0) return res;
  if (std::isinf(rho)) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    res.value = *hi - *lo;
    if (res.value > 0.0) {
      const auto a = static_cast<std::size_t>(lo - values.begin());
      const auto b = static_cast<std::size_t>(hi - values.begin());
      res.subsequence = {std::min(a, b), std::max(a, b)};
    } else {
      res.subsequence = {0};
    }
    return res;
  }
  std::vector<double> best(n, 0.0);
  std::vector<std::ptrdiff_t> pred(n, -1);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double cand = best[j] + detail::power_term(values[i] - values[j], rho);
      if (cand > best[i]) {
        best[i] = cand;
        pred[i] = static_cast<std::ptrdiff_t>(j);
      }
    }
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (best[i] > best[arg]) arg = i;
  }
  for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(arg); k >= 0; k = pred[static_cast<std::size_t>(k)]) {
    res.subsequence.push_back(static_cast<std::size_t>(k));
  }
  std::reverse(res.subsequence.begin(), res.subsequence.end());
  res.value = rho == 1.0 ? best[arg] : std::pow(best[arg], 1.0 / rho);
  return res;
}

inline VariationResult rho_variation(const SampledFamily& fam, double rho) { return rho_variation(fam.values, rho); }

/// Sum of |increments|^rho along a subsequence, in order.
inline double subsequence_power_sum(std::span<const double> values, std::span<const std::size_t> idx, double rho) {
  double s = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) s += detail::power_term(values[idx[k]] - values[idx[k - 1]], rho);
  return s;
}

/// Exhaustive enumeration of every subsequence; the oracle for rho_variation.
inline double rho_variation_bruteforce(std::span<const double> values, double rho) {
  if (!(rho >= 1.0)) throw InvalidArgument("rho_variation_bruteforce: rho must be >= 1");
  const std::size_t n = values.size();
  if (n > 20) throw InvalidArgument("rho_variation_bruteforce: family longer than 20");
  double best = 0.0;
  const std::uint32_t total = std::uint32_t{1} << n;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    double s = 0.0;
    int prev = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1u)) continue;
      if (prev >= 0) s += detail::power_term(values[i] - values[static_cast<std::size_t>(prev)], rho);
      prev = static_cast<int>(i);
    }
    best = std::max(best, s);
  }
  return rho == 1.0 ? best : std::pow(best, 1.0 / rho);
}

/// Fixed decreasing boundaries r_0 > r_1 > ...; window m is [r_{m+1}, r_m].
class WindowSpec {
 public:
  explicit WindowSpec(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
    require(boundaries_.size() >= 2, "WindowSpec: need at least two boundaries");
    for (std::size_t i = 1; i < boundaries_.size(); ++i) {
      require(boundaries_[i] < boundaries_[i - 1], "WindowSpec: boundaries must be strictly decreasing");
    }
  }

  /// r_m = 2^{-m}, covering [eps_min, eps_max].
  static WindowSpec dyadic(double eps_max, double eps_min) {
    return geometric(std::exp2(std::ceil(std::log2(eps_max))), 0.5, eps_min);
  }

  /// r_m = r0 ratio^m until the boundary drops below eps_min.
  static WindowSpec geometric(double r0, double ratio, double eps_min) {
    require(r0 > 0.0 && ratio > 0.0 && ratio < 1.0, "WindowSpec: need r0 > 0 and 0 < ratio < 1");
    std::vector<double> b{r0};
    while (b.back() >= eps_min) b.push_back(b.back() * ratio);
    if (b.size() < 2) b.push_back(b.back() * ratio);
    return WindowSpec(std::move(b));
  }

  const std::vector<double>& boundaries() const { return boundaries_; }
  std::size_t windows() const { return boundaries_.size() - 1; }

 private:
  std::vector<double> boundaries_;
};

/// sqrt(sum_m (max - min of the values with eps in [r_{m+1}, r_m])^2).
inline double oscillation(std::span<const double> values, std::span<const double> eps, const WindowSpec& windows) {
  require(values.size() == eps.size(), "oscillation: values and eps differ in length");
  const auto& r = windows.boundaries();
  double total = 0.0;
  for (std::size_t m = 0; m + 1 < r.size(); ++m) {
    double lo = kInfinity;
    double hi = -kInfinity;
    int count = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (eps[k] >= r[m + 1] && eps[k] <= r[m]) {
        lo = std::min(lo, values[k]);
        hi = std::max(hi, values[k]);
        ++count;
      }
    }
    if (count >= 2) total += (hi - lo) * (hi - lo);
  }
  return std::sqrt(total);
}

inline double oscillation(const SampledFamily& fam, const WindowSpec& windows) {
  return oscillation(fam.values, fam.grid.values(), windows);
}

/// Largest N with eps_1 < delta_1 <= eps_2 < ... < delta_N and
/// |T_{eps_i} - T_{delta_i}| > lambda. Values are scanned in increasing eps; a jump is
/// closed at the earliest index whose value leaves the (min, max) band of the values
/// seen since the previous jump by more than lambda. Earliest completion is optimal.
inline int lambda_jumps(std::span<const double> values, double lambda) {
  require(lambda > 0.0, "lambda_jumps: lambda must be positive");
  int count = 0;
  double lo = kInfinity;
  double hi = -kInfinity;
  for (std::size_t k = values.size(); k-- > 0;) {
    const double v = values[k];
    if (v - lo > lambda || hi - v > lambda) {
      ++count;
      lo = hi = v;  // the closing radius may open the next pair
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return count;
}

inline int lambda_jumps(const SampledFamily& fam, double lambda) { return lambda_jumps(fam.values, lambda); }

/// Number of (a, b) upcrossings: T_{eps_i} < a and T_{delta_i} > b with eps_i < delta_i,
/// scanning increasing eps.
inline int upcrossings(std::span<const double> values, double a, double b) {
  require(a < b, "upcrossings: need a < b");
  int count = 0;
  bool below = false;
  for (std::size_t k = values.size(); k-- > 0;) {
    const double v = values[k];
    if (v < a) {
      below = true;
    } else if (v > b && below) {
      ++count;
      below = false;
    }
  }
  return count;
}

inline int upcrossings(const SampledFamily& fam, double a, double b) { return upcrossings(fam.values, a, b); }

/// Index j of the dyadic interval I_j = [2^{-j-1}, 2^{-j}) containing eps.
inline int octave_of(double eps) {
  int e = 0;
  std::frexp(eps, &e);  // eps in [2^{e-1}, 2^e)
  return -e;
}

struct ShortLongSplit {
  std::vector<std::size_t> short_indices;
  std::vector<std::size_t> long_indices;
};

/// m is short when eps_m and eps_{m+1} lie in the same I_j, long otherwise.
inline ShortLongSplit split_short_long(std::span<const double> eps) {
  for (std::size_t i = 1; i < eps.size(); ++i) {
    require(eps[i] < eps[i - 1], "split_short_long: input must be strictly decreasing");
  }
  ShortLongSplit out;
  for (std::size_t m = 0; m + 1 < eps.size(); ++m) {
    if (octave_of(eps[m]) == octave_of(eps[m + 1])) out.short_indices.push_back(m);
    else out.long_indices.push_back(m);
  }
  return out;
}

/// sqrt(sum_j V_2(family restricted to eps in I_j)^2).
inline double short_variation(std::span<const double> values, std::span<const double> eps) {
  require(values.size() == eps.size(), "short_variation: values and eps differ in length");
  double total = 0.0;
  std::size_t start = 0;
  while (start < values.size()) {
    std::size_t end = start + 1;
    const int j = octave_of(eps[start]);
    while (end < values.size() && octave_of(eps[end]) == j) ++end;
    const double v = rho_variation(values.subspan(start, end - start), 2.0).value;
    total += v * v;
    start = end;
  }
  return std::sqrt(total);
}

inline double short_variation(const SampledFamily& fam) { return short_variation(fam.values, fam.grid.values()); }

}  // namespace lipvar::variation
