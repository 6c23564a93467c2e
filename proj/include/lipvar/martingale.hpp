#pragma once

// Dyadic martingale of T mu: conditional averages E_D, the lattice terms E_m^a, their
// translation averages E_m, the Lambda weight, and the W / S square functions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/kernels.hpp"
#include "lipvar/transforms.hpp"
#include "lipvar/variation.hpp"

namespace lipvar::martingale {

using geometry::DiscreteMeasure;
using geometry::VCube;
using kernels::CZKernel;

struct MartingaleConfig {
  int grid_points = 4;  // G offsets per axis
  int m_min = 0;
  int m_max = 4;
  double tail_radius = std::numeric_limits<double>::infinity();

  /// Cells of the finest generation must hold several sample points.
  void validate(double h) const {
    require(grid_points >= 1, "MartingaleConfig: grid_points must be >= 1");
    require(m_min <= m_max, "MartingaleConfig: m_min must not exceed m_max");
    require(std::ldexp(1.0, -m_max) >= 4.0 * h * (1.0 - 1e-12),
            "MartingaleConfig: 2^-m_max must be at least 4h");
    require(tail_radius > 0.0, "MartingaleConfig: tail radius must be positive");
  }
};

/// E_D mu = (1/mu(D)) sum_{z in D} sum_{y not in D} K(z - y) w_z w_y, by direct double sum.
inline double conditional_avg(const DiscreteMeasure& mu, const CZKernel& kernel, const VCube& cell) {
  const int d = mu.d();
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu.size(); ++i) (cell.contains(mu.base(i)) ? in : out).push_back(i);
  double m = 0.0;
  for (std::size_t i : in) m += mu.weight(i);
  if (!(m > 0.0)) throw InvalidArgument("conditional_avg: zero-mass cell");
  std::vector<double> diff(static_cast<std::size_t>(d));
  double s = 0.0;
  for (std::size_t zi : in) {
    const auto z = mu.point(zi);
    double row = 0.0;
    for (std::size_t yi : out) {
      const auto y = mu.point(yi);
      if (!mu.within_tail(z, y)) continue;
      for (int k = 0; k < d; ++k) diff[k] = z[k] - y[k];
      row += kernel.eval(diff) * mu.weight(yi);
    }
    s += row * mu.weight(zi);
  }
  return s / m;
}

/// E_m^a mu(x) by the direct double sum over the lattice cell containing x.
inline double martingale_term(const DiscreteMeasure& mu, const CZKernel& kernel, std::span<const double> a, int m,
                              std::span<const double> x) {
  return conditional_avg(mu, kernel, geometry::translated_cell(a, m, x.first(static_cast<std::size_t>(mu.n()))));
}

/// Midpoint offsets a_k = (k + 1/2) 2^-m / G per axis, k in [0, G)^n, first axis slowest.
inline std::vector<std::vector<double>> offset_grid(int n, int m, int g) {
  const double step = std::ldexp(1.0, -m) / g;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(g);
  std::vector<std::vector<double>> out;
  out.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> a(static_cast<std::size_t>(n));
    std::size_t rem = k;
    for (int i = n - 1; i >= 0; --i) {
      a[i] = (static_cast<double>(rem % static_cast<std::size_t>(g)) + 0.5) * step;
      rem /= static_cast<std::size_t>(g);
    }
    out.push_back(std::move(a));
  }
  return out;
}

struct AveragedTerm {
  double value = 0.0;
  int used = 0;
  int skipped = 0;
  std::vector<double> per_offset;  // NaN for skipped offsets
};

/// Precomputes T mu(z) = sum_{y != z} K(z - y) w_y at every support point, so that
/// E_D mu = (1/mu(D)) sum_{z in D} w_z T mu(z) (within-cell pairs cancel by oddness).
class MartingaleEngine {
 public:
  MartingaleEngine(const DiscreteMeasure& mu, const CZKernel& kernel, int jobs = 0) : mu_(mu), kernel_(kernel) {
    require(kernel.n == mu.n() && kernel.d == mu.d(), "MartingaleEngine: kernel and measure dimensions differ");
    const std::size_t count = mu.size();
    const int d = mu.d();
    tmu_.assign(count, 0.0);
    parallel_for(
        count,
        [&](std::size_t i) {
          const auto z = mu_.point(i);
          std::vector<double> diff(static_cast<std::size_t>(d));
          double s = 0.0;
          for (std::size_t j = 0; j < count; ++j) {
            if (j == i) continue;
            const auto y = mu_.point(j);
            if (!mu_.within_tail(z, y)) continue;
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
              diff[k] = z[k] - y[k];
              r2 += diff[k] * diff[k];
            }
            if (r2 == 0.0) continue;
            s += kernel_.eval(diff) * mu_.weight(j);
          }
          tmu_[i] = s;
        },
        jobs);
    if (mu.n() == 1) {
      order_.resize(count);
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::stable_sort(order_.begin(), order_.end(),
                       [&](std::size_t a, std::size_t b) { return mu_.base(a)[0] < mu_.base(b)[0]; });
      keys_.resize(count);
      prefix_mass_.assign(count + 1, 0.0);
      prefix_moment_.assign(count + 1, 0.0);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = order_[k];
        keys_[k] = mu_.base(i)[0];
        prefix_mass_[k + 1] = prefix_mass_[k] + mu_.weight(i);
        prefix_moment_[k + 1] = prefix_moment_[k] + mu_.weight(i) * tmu_[i];
      }
    }
  }

  const DiscreteMeasure& measure() const { return mu_; }
  const CZKernel& kernel() const { return kernel_; }
  double tmu(std::size_t i) const { return tmu_[i]; }
  const std::vector<double>& tmu_values() const { return tmu_; }

  /// (mu(D), sum_{z in D} w_z T mu(z)).
  std::pair<double, double> cell_sums(const VCube& cell) const {
    if (!keys_.empty()) {
      const auto lo = std::lower_bound(keys_.begin(), keys_.end(), cell.lo(0)) - keys_.begin();
      const auto hi = std::lower_bound(keys_.begin(), keys_.end(), cell.hi(0)) - keys_.begin();
      // Short cells are summed directly, which avoids cancellation in the prefix difference.
      double m = 0.0;
      double s = 0.0;
      if (hi - lo <= 64) {
        for (auto k = lo; k < hi; ++k) {
          const std::size_t i = order_[static_cast<std::size_t>(k)];
          m += mu_.weight(i);
          s += mu_.weight(i) * tmu_[i];
        }
        return {m, s};
      }
      return {prefix_mass_[static_cast<std::size_t>(hi)] - prefix_mass_[static_cast<std::size_t>(lo)],
              prefix_moment_[static_cast<std::size_t>(hi)] - prefix_moment_[static_cast<std::size_t>(lo)]};
    }
    double m = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < mu_.size(); ++i) {
      if (!cell.contains(mu_.base(i))) continue;
      m += mu_.weight(i);
      s += mu_.weight(i) * tmu_[i];
    }
    return {m, s};
  }

  /// E_D mu through the T mu identity; nullopt for a zero-mass cell.
  std::optional<double> cell_average(const VCube& cell) const {
    const auto [m, s] = cell_sums(cell);
    if (!(m > 0.0)) return std::nullopt;
    return s / m;
  }

  double term(std::span<const double> a, int m, std::span<const double> x) const {
    const auto v = cell_average(geometry::translated_cell(a, m, x.first(static_cast<std::size_t>(mu_.n()))));
    if (!v) throw InvalidArgument("martingale_term: zero-mass containing cell");
    return *v;
  }

  /// E_m mu(x): midpoint average over G^n offsets of the period cube [0, 2^-m)^n.
  /// Offsets whose cell is empty are skipped; more than 20% skipped is an error.
  AveragedTerm averaged(int m, std::span<const double> x, int g) const {
    require(g >= 1, "averaged_term: G must be >= 1");
    AveragedTerm out;
    const auto offsets = offset_grid(mu_.n(), m, g);
    double sum = 0.0;
    for (const auto& a : offsets) {
      const auto v = cell_average(geometry::translated_cell(a, m, x.first(static_cast<std::size_t>(mu_.n()))));
      if (!v) {
        ++out.skipped;
        out.per_offset.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      ++out.used;
      sum += *v;
      out.per_offset.push_back(*v);
    }
    if (out.used == 0 || static_cast<double>(out.skipped) > 0.2 * static_cast<double>(offsets.size())) {
      throw ComputationError("averaged_term: " + std::to_string(out.skipped) + " of " +
                             std::to_string(offsets.size()) + " offsets have empty cells");
    }
    out.value = sum / out.used;
    return out;
  }

 private:
  const DiscreteMeasure& mu_;
  CZKernel kernel_;
  std::vector<double> tmu_;
  std::vector<std::size_t> order_;
  std::vector<double> keys_;
  std::vector<double> prefix_mass_;
  std::vector<double> prefix_moment_;
};

inline AveragedTerm averaged_term(const DiscreteMeasure& mu, const CZKernel& kernel, int m,
                                  std::span<const double> x, const MartingaleConfig& cfg) {
  cfg.validate(mu.h());
  const MartingaleEngine engine(mu, kernel);
  return engine.averaged(m, x, cfg.grid_points);
}

/// Centers b of the cells of the offset lattices a_k (k in [0, G)^n) that contain x~_1.
/// The cell for node b is b + [-2^-m-1, 2^-m-1)^n, i.e. D_m^{b - 2^-m-1}. Using these nodes for
/// Lambda makes the double sum reproduce averaged_term exactly.
inline std::vector<std::vector<double>> lambda_nodes(std::span<const double> x1_base, int m, int g) {
  const double half = std::ldexp(1.0, -m - 1);
  std::vector<std::vector<double>> nodes;
  for (const auto& a : offset_grid(static_cast<int>(x1_base.size()), m, g)) {
    const VCube c = geometry::translated_cell(a, m, x1_base);
    std::vector<double> b(x1_base.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = c.lo(static_cast<int>(i)) + half;
    nodes.push_back(std::move(b));
  }
  return nodes;
}

/// Lambda_m^{mu_1..mu_k}(x_1..x_i; y_1..y_j) = 2^{nm} int chi[all x in D, all y not in D] / prod mu_l(D) da,
/// as the mean of the integrand over the G^n nodes of lambda_nodes(x_1) (the region where
/// the integrand can be nonzero has measure 2^-mn).
inline double lambda_weight(std::span<const DiscreteMeasure* const> measures, int m,
                            std::span<const std::vector<double>> xs, std::span<const std::vector<double>> ys,
                            int g) {
  require(!measures.empty(), "lambda_weight: need at least one measure");
  require(!xs.empty(), "lambda_weight: need at least one x");
  const int n = measures.front()->n();
  const double half = std::ldexp(1.0, -m - 1);
  const auto nodes = lambda_nodes(std::span<const double>(xs.front()).first(static_cast<std::size_t>(n)), m, g);
  double sum = 0.0;
  for (const auto& b : nodes) {
    std::vector<double> lo(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) lo[i] = b[i] - half;
    const VCube cell = VCube::from_lower(lo, 2.0 * half);
    bool ok = true;
    for (const auto& x : xs) ok = ok && cell.contains(std::span<const double>(x).first(static_cast<std::size_t>(n)));
    for (const auto& y : ys) ok = ok && !cell.contains(std::span<const double>(y).first(static_cast<std::size_t>(n)));
    if (!ok) continue;
    double denom = 1.0;
    for (const DiscreteMeasure* mu : measures) {
      const double mm = geometry::mass(*mu, cell);
      if (!(mm > 0.0)) throw InvalidArgument("lambda_weight: zero cell mass inside the integration region");
      denom *= mm;
    }
    sum += 1.0 / denom;
  }
  return sum / static_cast<double>(nodes.size());
}

/// E_m mu(x) through Eq. Lambda: sum_z sum_y Lambda_m(x, z; y) K(z - y) w_z w_y, with the
/// Lambda quadrature nodes of lambda_nodes(x). Cells are enumerated once per node, which is
/// the same double sum regrouped.
inline double lambda_form(const DiscreteMeasure& mu, const CZKernel& kernel, int m, std::span<const double> x,
                          int g) {
  const int n = mu.n();
  const int d = mu.d();
  const double half = std::ldexp(1.0, -m - 1);
  const auto nodes = lambda_nodes(x.first(static_cast<std::size_t>(n)), m, g);
  std::vector<double> diff(static_cast<std::size_t>(d));
  double total = 0.0;
  for (std::size_t zi = 0; zi < mu.size(); ++zi) {
    const auto z = mu.point(zi);
    for (std::size_t yi = 0; yi < mu.size(); ++yi) {
      if (yi == zi) continue;
      const auto y = mu.point(yi);
      if (!mu.within_tail(z, y)) continue;
      // Lambda_m(x, z; y) by direct quadrature over the nodes.
      double lam = 0.0;
      for (const auto& b : nodes) {
        std::vector<double> lo(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) lo[i] = b[i] - half;
        const VCube cell = VCube::from_lower(lo, 2.0 * half);
        if (!cell.contains(z.first(static_cast<std::size_t>(n))) || cell.contains(y.first(static_cast<std::size_t>(n)))) {
          continue;
        }
        const double mm = geometry::mass(mu, cell);
        if (!(mm > 0.0)) throw InvalidArgument("lambda_form: zero cell mass inside the integration region");
        lam += 1.0 / mm;
      }
      if (lam == 0.0) continue;
      lam /= static_cast<double>(nodes.size());
      for (int k = 0; k < d; ++k) diff[k] = z[k] - y[k];
      total += lam * kernel.eval(diff) * mu.weight(zi) * mu.weight(yi);
    }
  }
  return total;
}

struct WEntry {
  int m = 0;
  double smooth = 0.0;   // (K phi_{2^-m} * mu)(x)
  double em = 0.0;       // E_m mu(x)
  double partial = 0.0;  // running sqrt(sum |smooth - E_m|^2) up to this m
};

struct WProfile {
  double value = 0.0;
  std::vector<WEntry> entries;
};

/// W mu(x) = sqrt(sum_{m in range} |(K phi_{2^-m} * mu)(x) - E_m mu(x)|^2), with the per-m profile.
inline WProfile w_diagnostic(const MartingaleEngine& engine, std::span<const double> x, const MartingaleConfig& cfg) {
  const auto& mu = engine.measure();
  cfg.validate(mu.h());
  const std::vector<double> ones(mu.size(), 1.0);
  WProfile prof;
  double acc = 0.0;
  for (int m = cfg.m_min; m <= cfg.m_max; ++m) {
    WEntry e;
    e.m = m;
    e.smooth = transforms::truncated_smooth(engine.kernel(), mu, ones, x, std::ldexp(1.0, -m));
    e.em = engine.averaged(m, x, cfg.grid_points).value;
    acc += (e.smooth - e.em) * (e.smooth - e.em);
    e.partial = std::sqrt(acc);
    prof.entries.push_back(e);
  }
  prof.value = std::sqrt(acc);
  return prof;
}

inline double w_diagnostic(const DiscreteMeasure& mu, const CZKernel& kernel, std::span<const double> x,
                           const MartingaleConfig& cfg) {
  const MartingaleEngine engine(mu, kernel);
  return w_diagnostic(engine, x, cfg).value;
}

/// S mu(x): the short variation of the smooth family of mu (f = 1) on the grid.
inline double s_diagnostic(const DiscreteMeasure& mu, const CZKernel& kernel, std::span<const double> x,
                           const transforms::EpsGrid& grid) {
  grid.validate_for(mu.h());
  const std::vector<double> ones(mu.size(), 1.0);
  const auto fam = transforms::sample_family(kernel, mu, ones, x, grid, transforms::Mode::smooth);
  return variation::short_variation(fam);
}

struct LepingleReport {
  double ratio = 0.0;        // ||V_rho(E mu)||_{L2(mu restricted to 3P)} / mu(P)^{1/2}
  double mass_p = 0.0;
  std::size_t points = 0;
};

/// Lepingle-scale ratio for the averaged family {E_m mu} (or the single lattice family
/// {E_m^a mu} when a is given) over m in the configured range. The L2 norm runs over
/// the support points with base in 3P.
inline LepingleReport lepingle_ratio(const MartingaleEngine& engine, const VCube& p_cube, const MartingaleConfig& cfg,
                                     double rho, std::optional<std::vector<double>> a = std::nullopt, int jobs = 0) {
  const auto& mu = engine.measure();
  cfg.validate(mu.h());
  LepingleReport rep;
  rep.mass_p = geometry::mass(mu, p_cube);
  require(rep.mass_p > 0.0, "lepingle_ratio: P has zero mass");
  const VCube big = p_cube.dilate(3.0);
  std::vector<std::size_t> pts;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (big.contains(mu.base(i))) pts.push_back(i);
  }
  std::vector<double> contrib(pts.size(), 0.0);
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        const auto x = mu.point(pts[k]);
        std::vector<double> fam;
        for (int m = cfg.m_min; m <= cfg.m_max; ++m) {
          fam.push_back(a ? engine.term(*a, m, x) : engine.averaged(m, x, cfg.grid_points).value);
        }
        const double v = variation::rho_variation(fam, rho).value;
        contrib[k] = v * v * mu.weight(pts[k]);
      },
      jobs);
  double s = 0.0;
  for (double c : contrib) s += c;
  rep.points = pts.size();
  rep.ratio = std::sqrt(s / rep.mass_p);
  return rep;
}

}  // namespace lipvar::martingale
