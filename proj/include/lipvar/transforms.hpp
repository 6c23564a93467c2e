#pragma once

// Sharp and smooth truncations of a singular integral against a discrete measure,
// and the epsilon-sampled families every variation functional consumes.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/kernels.hpp"

namespace lipvar::transforms {

using geometry::DiscreteMeasure;
using kernels::CZKernel;
using kernels::TruncationProfile;

/// Strictly decreasing list of truncation radii.
class EpsGrid {
 public:
  EpsGrid() = default;
  explicit EpsGrid(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), "EpsGrid: empty grid");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(values_[i] > 0.0 && std::isfinite(values_[i]), "EpsGrid: values must be positive");
      if (i > 0) require(values_[i] < values_[i - 1], "EpsGrid: values must be strictly decreasing");
    }
  }

  /// eps_k = eps_max 2^{-k/K} for every k with eps_k >= eps_min.
  static EpsGrid log_uniform(double eps_max, double eps_min, int per_octave) {
    require(eps_max >= eps_min && eps_min > 0.0, "EpsGrid: need eps_max >= eps_min > 0");
    require(per_octave >= 1, "EpsGrid: need at least one point per octave");
    std::vector<double> v;
    for (int k = 0;; ++k) {
      const double e = eps_max * std::exp2(-static_cast<double>(k) / per_octave);
      if (e < eps_min * (1.0 - 1e-12)) break;
      v.push_back(e);
    }
    return EpsGrid(std::move(v));
  }

  /// Below about four sample spacings the quadrature no longer resolves the kernel.
  void validate_for(double h) const {
    if (values_.back() < 4.0 * h * (1.0 - 1e-12)) {
      throw InvalidArgument("EpsGrid: smallest eps " + std::to_string(values_.back()) +
                            " is below 4h = " + std::to_string(4.0 * h));
    }
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.back(); }
  double max() const { return values_.front(); }

 private:
  std::vector<double> values_;
};

enum class Mode { smooth, sharp };

inline std::string mode_name(Mode m) { return m == Mode::smooth ? "smooth" : "sharp"; }

/// values[k] is the truncated transform at grid[k] (decreasing eps).
struct SampledFamily {
  EpsGrid grid;
  std::vector<double> values;
  std::vector<double> anchor;
  std::string provenance;

  std::size_t size() const { return values.size(); }
};

namespace detail {

struct Pair {
  double base_dist;
  double full_dist;
  double contribution;  // K(x - y) f(y) w(y)
};

// Per-support-point data at anchor x, in support order. Points outside the tail
// radius and points with f(y) = 0 or y = x are dropped.
inline std::vector<Pair> pairs_at(const CZKernel& kernel, const DiscreteMeasure& mu,
                                  std::span<const double> f, std::span<const double> x) {
  require(f.size() == mu.size(), "transform: f must have one value per support point");
  require(x.size() == static_cast<std::size_t>(mu.d()), "transform: anchor dimension mismatch");
  const int n = mu.n();
  const int d = mu.d();
  std::vector<Pair> out;
  out.reserve(mu.size());
  std::vector<double> diff(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (f[j] == 0.0) continue;
    const auto y = mu.point(j);
    if (!mu.within_tail(x, y)) continue;
    double rb2 = 0.0;
    double rf2 = 0.0;
    for (int i = 0; i < d; ++i) {
      diff[i] = x[i] - y[i];
      rf2 += diff[i] * diff[i];
      if (i < n) rb2 += diff[i] * diff[i];
    }
    if (rf2 == 0.0) continue;
    const double k = kernel.eval(diff);
    out.push_back(Pair{std::sqrt(rb2), std::sqrt(rf2), k * f[j] * mu.weight(j)});
  }
  return out;
}

inline double sharp_sum(const std::vector<Pair>& pairs, double eps) {
  double s = 0.0;
  for (const Pair& p : pairs) {
    if (p.full_dist > eps) s += p.contribution;
  }
  return s;
}

inline double smooth_sum(const std::vector<Pair>& pairs, const TruncationProfile& prof, double eps) {
  double s = 0.0;
  for (const Pair& p : pairs) {
    const double w = prof(p.base_dist / eps);
    if (w != 0.0) s += w * p.contribution;
  }
  return s;
}

}  // namespace detail

/// T_eps f(x): sum over support points with |x - y| > eps of K(x - y) f(y) w(y).
inline double truncated_sharp(const CZKernel& kernel, const DiscreteMeasure& mu, std::span<const double> f,
                              std::span<const double> x, double eps) {
  require(eps > 0.0, "truncated_sharp: eps must be positive");
  return detail::sharp_sum(detail::pairs_at(kernel, mu, f, x), eps);
}

/// (K phi_eps * f mu)(x).
inline double truncated_smooth(const CZKernel& kernel, const DiscreteMeasure& mu, std::span<const double> f,
                               std::span<const double> x, double eps) {
  require(eps > 0.0, "truncated_smooth: eps must be positive");
  const TruncationProfile prof(mu.n());
  return detail::smooth_sum(detail::pairs_at(kernel, mu, f, x), prof, eps);
}

/// Evaluates the truncation at every grid radius. Each value is summed in support
/// order exactly as the single-eps functions do, so both routes agree bit for bit.
inline SampledFamily sample_family(const CZKernel& kernel, const DiscreteMeasure& mu, std::span<const double> f,
                                   std::span<const double> x, const EpsGrid& grid, Mode mode) {
  const auto pairs = detail::pairs_at(kernel, mu, f, x);
  const TruncationProfile prof(mu.n());
  SampledFamily fam;
  fam.grid = grid;
  fam.anchor.assign(x.begin(), x.end());
  fam.provenance = kernel.name + ":" + mode_name(mode);
  fam.values.reserve(grid.size());
  for (double eps : grid.values()) {
    fam.values.push_back(mode == Mode::smooth ? detail::smooth_sum(pairs, prof, eps)
                                              : detail::sharp_sum(pairs, eps));
  }
  return fam;
}

/// sup over the grid of |T_{phi_eps} f(x)|.
inline double maximal(const SampledFamily& fam) {
  require(!fam.values.empty(), "maximal: empty family");
  double m = 0.0;
  for (double v : fam.values) m = std::max(m, std::abs(v));
  return m;
}

/// Dyadic-comparable surrogate of the Hardy-Littlewood maximal function: the largest
/// mu-average of |f| over v-cubes of the given sides whose centers sit at x~ + s/4 {-1,0,1}^n.
inline double hl_maximal(const DiscreteMeasure& mu, std::span<const double> f, std::span<const double> x,
                         std::span<const double> scales) {
  require(f.size() == mu.size(), "hl_maximal: f must have one value per support point");
  const int n = mu.n();
  std::size_t shifts = 1;
  for (int i = 0; i < n; ++i) shifts *= 3;
  double best = 0.0;
  for (double s : scales) {
    require(s > 0.0, "hl_maximal: scales must be positive");
    for (std::size_t k = 0; k < shifts; ++k) {
      std::vector<double> c(static_cast<std::size_t>(n));
      std::size_t rem = k;
      for (int i = 0; i < n; ++i) {
        const double off = static_cast<double>(rem % 3) - 1.0;
        rem /= 3;
        c[i] = x[i] + 0.25 * s * off;
      }
      const geometry::VCube cube(std::move(c), s);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t j = 0; j < mu.size(); ++j) {
        if (!cube.contains(mu.base(j))) continue;
        num += std::abs(f[j]) * mu.weight(j);
        den += mu.weight(j);
      }
      if (den > 0.0) best = std::max(best, num / den);
    }
  }
  return best;
}

/// Default maximal-function scales: powers of two from 4h up to the given extent.
inline std::vector<double> dyadic_scales(double h, double extent) {
  std::vector<double> s;
  for (double v = 4.0 * h; v <= extent * (1.0 + 1e-12); v *= 2.0) s.push_back(v);
  if (s.empty()) s.push_back(extent);
  return s;
}

struct PrincipalValue {
  double value = 0.0;
  double cauchy_defect = 0.0;  // max - min over the last octave of the grid
};

inline PrincipalValue principal_value_estimate(const SampledFamily& fam) {
  require(!fam.values.empty(), "principal_value_estimate: empty family");
  PrincipalValue pv;
  pv.value = fam.values.back();
  const double floor_eps = fam.grid.min();
  double lo = pv.value;
  double hi = pv.value;
  for (std::size_t k = 0; k < fam.size(); ++k) {
    if (fam.grid[k] <= 2.0 * floor_eps * (1.0 + 1e-12)) {
      lo = std::min(lo, fam.values[k]);
      hi = std::max(hi, fam.values[k]);
    }
  }
  pv.cauchy_defect = hi - lo;
  return pv;
}

/// Upper bound for |T_eps f(x) - T_{phi_eps} f(x)|: the |K f| mass of the points
/// with |x - y| > eps and |x~ - y~| < 3 sqrt(n) eps, the only ones where the truncations differ.
inline double sharp_smooth_gap_bound(const CZKernel& kernel, const DiscreteMeasure& mu, std::span<const double> f,
                                     std::span<const double> x, double eps) {
  const double outer = 3.0 * std::sqrt(static_cast<double>(mu.n())) * eps;
  double s = 0.0;
  for (const auto& p : detail::pairs_at(kernel, mu, f, x)) {
    if (p.full_dist > eps && p.base_dist < outer) s += std::abs(p.contribution);
  }
  return s;
}

}  // namespace lipvar::transforms
