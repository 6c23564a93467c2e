#pragma once

// Lipschitz graphs over R^n, their discretized surface measures, and the
// vertical-cube (v-cube) lattices used by every multiscale quantity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lipvar/core.hpp"

namespace lipvar::geometry {

/// A v-cube Q = Q~ x R^{d-n}, described by the center and side of its base cube.
/// Membership is half-open: lo <= x~ < lo + side in every coordinate.
class VCube {
 public:
  VCube() = default;
  VCube(std::vector<double> center, double side) : center_(std::move(center)), side_(side) {
    require(!center_.empty(), "VCube: empty center");
    require(side_ > 0.0 && std::isfinite(side_), "VCube: side must be positive");
  }

  /// Cube [lo, lo + side)^n given by its lower corner.
  static VCube from_lower(std::vector<double> lo, double side) {
    for (double& x : lo) x += 0.5 * side;
    return VCube(std::move(lo), side);
  }

  int dim() const { return static_cast<int>(center_.size()); }
  std::span<const double> center() const { return center_; }
  double side() const { return side_; }
  double lo(int i) const { return center_[i] - 0.5 * side_; }
  double hi(int i) const { return center_[i] + 0.5 * side_; }

  VCube dilate(double lambda) const { return VCube(center_, lambda * side_); }

  bool contains(std::span<const double> base) const {
    for (int i = 0; i < dim(); ++i) {
      if (base[i] < lo(i) || base[i] >= hi(i)) return false;
    }
    return true;
  }

  /// The 2^n dyadic children in lexicographic order of their centers.
  std::vector<VCube> children() const {
    const int n = dim();
    const std::size_t count = std::size_t{1} << n;
    std::vector<VCube> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<double> c(center_.size());
      for (int i = 0; i < n; ++i) {
        const bool upper = (k >> (n - 1 - i)) & 1u;
        c[i] = center_[i] + (upper ? 0.25 : -0.25) * side_;
      }
      out.emplace_back(std::move(c), 0.5 * side_);
    }
    return out;
  }

  friend bool operator==(const VCube& a, const VCube& b) {
    return a.side_ == b.side_ && a.center_ == b.center_;
  }

 private:
  std::vector<double> center_;
  double side_ = 1.0;
};

/// Vertical ball B(z~, r) x R^{d-n}; closed.
struct VBall {
  std::vector<double> center;
  double radius = 0.0;

  double base_distance(std::span<const double> base) const {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
      const double t = base[i] - center[i];
      s += t * t;
    }
    return std::sqrt(s);
  }
  bool contains(std::span<const double> base) const { return base_distance(base) <= radius; }
  /// Distance from a point of R^d to the complement of the ball (0 outside).
  double depth(std::span<const double> base) const {
    return std::max(0.0, radius - base_distance(base));
  }
};

/// B_Q = B(z~_Q, C_Gamma l(Q)) x R^{d-n}.
inline VBall window_ball(const VCube& q, double window_const) {
  return VBall{std::vector<double>(q.center().begin(), q.center().end()), window_const * q.side()};
}

/// ceil(10 sqrt(n) (1 + lip)) + 1, the smallest integer comfortably above 10 sqrt(n)(1 + lip).
inline double default_window_constant(int n, double lip) {
  return std::ceil(10.0 * std::sqrt(static_cast<double>(n)) * (1.0 + lip)) + 1.0;
}

using GraphMap = std::function<void(std::span<const double> base, std::span<double> out)>;

class LipschitzGraph {
 public:
  LipschitzGraph(int n, int d, GraphMap map, double lip, std::optional<VCube> support_box,
                 std::string family)
      : n_(n), d_(d), map_(std::move(map)), lip_(lip), support_box_(std::move(support_box)),
        family_(std::move(family)) {
    require(n_ >= 1 && d_ > n_, "LipschitzGraph: need 1 <= n < d");
    require(lip_ >= 0.0 && std::isfinite(lip_), "LipschitzGraph: lip must be finite and >= 0");
    if (support_box_) require(support_box_->dim() == n_, "LipschitzGraph: support box dimension");
  }

  int n() const { return n_; }
  int d() const { return d_; }
  int codim() const { return d_ - n_; }
  double lip() const { return lip_; }
  const std::optional<VCube>& support_box() const { return support_box_; }
  const std::string& family() const { return family_; }

  void eval(std::span<const double> base, std::span<double> out) const { map_(base, out); }

  std::vector<double> eval(std::span<const double> base) const {
    std::vector<double> out(static_cast<std::size_t>(codim()), 0.0);
    map_(base, out);
    return out;
  }

  /// The graph point (x~, A(x~)) in R^d.
  std::vector<double> lift(std::span<const double> base) const {
    std::vector<double> p(static_cast<std::size_t>(d_), 0.0);
    std::copy(base.begin(), base.begin() + n_, p.begin());
    map_(base.first(static_cast<std::size_t>(n_)), std::span<double>(p).subspan(static_cast<std::size_t>(n_)));
    return p;
  }

 private:
  int n_;
  int d_;
  GraphMap map_;
  double lip_;
  std::optional<VCube> support_box_;
  std::string family_;
};

enum class FamilyKind { flat, sawtooth, corner, multiscale, from_samples };

/// Rows of a graph sample table: x1..xn followed by a1..a_{d-n}.
struct SampleTable {
  int n = 1;
  int codim = 1;
  std::vector<std::vector<double>> rows;
};

struct FamilySpec {
  FamilyKind kind = FamilyKind::flat;
  int n = 1;
  int d = 2;
  double slope = 1.0;      // sawtooth, corner
  double period = 0.25;    // sawtooth
  double corner_at = 0.0;  // corner: first base coordinate of the kink
  double lip = 1.0;        // multiscale
  std::uint64_t seed = 0;  // multiscale
  int levels = 4;          // multiscale
  std::optional<VCube> support_box;
  SampleTable table;                  // from_samples
  std::optional<double> declared_lip;  // from_samples
};

namespace detail {

// Triangle wave of slope +-1 vanishing on period * Z.
inline double triangle(double t, double period) {
  return std::abs(t - period * std::nearbyint(t / period));
}

// Distance from x~ to the complement of the cube, measured in the max norm.
inline double depth_in_box(const VCube& box, std::span<const double> base) {
  double depth = std::numeric_limits<double>::infinity();
  for (int i = 0; i < box.dim(); ++i) {
    depth = std::min({depth, base[i] - box.lo(i), box.hi(i) - base[i]});
  }
  return std::max(0.0, depth);
}

// Clamping |A| by lip * depth keeps the Lipschitz constant and makes A vanish off the box.
inline GraphMap compactify(GraphMap inner, VCube box, double lip) {
  return [inner = std::move(inner), box = std::move(box), lip](std::span<const double> base,
                                                                  std::span<double> out) {
    const double cap = lip * depth_in_box(box, base);
    if (cap <= 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    inner(base, out);
    for (double& v : out) v = std::clamp(v, -cap, cap);
  };
}

inline std::string kind_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::flat: return "flat";
    case FamilyKind::sawtooth: return "sawtooth";
    case FamilyKind::corner: return "corner";
    case FamilyKind::multiscale: return "multiscale";
    case FamilyKind::from_samples: return "from_samples";
  }
  return "unknown";
}

}  // namespace detail

inline LipschitzGraph build_graph(const FamilySpec& spec) {
  const int n = spec.n;
  const int d = spec.d;
  require(n >= 1 && d > n, "build_graph: need 1 <= n < d");
  GraphMap map;
  double lip = 0.0;
  switch (spec.kind) {
    case FamilyKind::flat:
      map = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      };
      lip = 0.0;
      break;
    case FamilyKind::sawtooth: {
      require(spec.slope > 0.0 && std::isfinite(spec.slope), "sawtooth: slope must be positive");
      require(spec.period > 0.0 && std::isfinite(spec.period), "sawtooth: period must be positive");
      map = [slope = spec.slope, period = spec.period](std::span<const double> base,
                                                        std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = slope * detail::triangle(base[0], period);
      };
      lip = spec.slope;
      break;
    }
    case FamilyKind::corner: {
      require(spec.slope > 0.0 && std::isfinite(spec.slope), "corner: slope must be positive");
      map = [slope = spec.slope, x0 = spec.corner_at](std::span<const double> base,
                                                        std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        double s = (base[0] - x0) * (base[0] - x0);
        for (std::size_t i = 1; i < base.size(); ++i) s += base[i] * base[i];
        out[0] = slope * std::sqrt(s);
      };
      lip = spec.slope;
      break;
    }
    case FamilyKind::multiscale: {
      require(spec.lip > 0.0 && std::isfinite(spec.lip), "multiscale: lip must be positive");
      require(spec.levels >= 1 && spec.levels <= 40, "multiscale: levels must be in [1, 40]");
      std::mt19937_64 rng(spec.seed);
      std::vector<double> amplitude(static_cast<std::size_t>(spec.levels));
      for (double& a : amplitude) {
        a = ((rng() >> 63) != 0u ? 1.0 : -1.0) * spec.lip / spec.levels;
      }
      map = [amplitude](std::span<const double> base, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        double period = 0.5;
        double v = 0.0;
        for (double a : amplitude) {
          v += a * detail::triangle(base[0], period);
          period *= 0.5;
        }
        out[0] = v;
      };
      // Each level's slope sign is set by a distinct binary digit of x1, so every
      // sign pattern occurs and the bound sum |a_k| is attained.
      lip = spec.lip;
      break;
    }
    case FamilyKind::from_samples: {
      const SampleTable& table = spec.table;
      require(table.n == 1, "from_samples: piecewise-linear interpolation requires n = 1");
      require(table.n == n && table.codim == d - n, "from_samples: table shape does not match (n, d)");
      require(table.rows.size() >= 2, "from_samples: need at least two rows");
      for (const auto& row : table.rows) {
        require(row.size() == static_cast<std::size_t>(1 + table.codim), "from_samples: ragged row");
        for (double v : row) {
          if (!std::isfinite(v)) throw InvalidArgument("from_samples: non-finite sample value");
        }
      }
      double max_slope = 0.0;
      for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const double dx = table.rows[i][0] - table.rows[i - 1][0];
        require(dx > 0.0, "from_samples: table must be strictly sorted by x1");
        double da = 0.0;
        for (int k = 1; k <= table.codim; ++k) {
          const double t = table.rows[i][k] - table.rows[i - 1][k];
          da += t * t;
        }
        max_slope = std::max(max_slope, std::sqrt(da) / dx);
      }
      if (spec.declared_lip && max_slope > *spec.declared_lip * (1.0 + 1e-12)) {
        throw InvalidArgument("from_samples: sample slopes violate the declared Lipschitz constant");
      }
      map = [rows = table.rows](std::span<const double> base, std::span<double> out) {
        const double x = base[0];
        if (x <= rows.front()[0]) {
          for (std::size_t k = 0; k < out.size(); ++k) out[k] = rows.front()[k + 1];
          return;
        }
        if (x >= rows.back()[0]) {
          for (std::size_t k = 0; k < out.size(); ++k) out[k] = rows.back()[k + 1];
          return;
        }
        auto it = std::upper_bound(rows.begin(), rows.end(), x,
                                   [](double value, const std::vector<double>& r) { return value < r[0]; });
        const auto& r1 = *it;
        const auto& r0 = *(it - 1);
        const double t = (x - r0[0]) / (r1[0] - r0[0]);
        for (std::size_t k = 0; k < out.size(); ++k) {
          out[k] = (t == 0.0) ? r0[k + 1] : r0[k + 1] + t * (r1[k + 1] - r0[k + 1]);
        }
      };
      lip = max_slope;
      break;
    }
  }
  if (spec.support_box && spec.kind != FamilyKind::flat) {
    map = detail::compactify(std::move(map), *spec.support_box, lip);
  }
  return LipschitzGraph(n, d, std::move(map), lip, spec.support_box, detail::kind_name(spec.kind));
}

/// Weighted point cloud approximating f H^n restricted to a graph.
/// Coordinates are stored row-major, one row of length d per point.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(int n, int d, std::vector<double> coords, std::vector<double> weights,
                  std::vector<double> density, double h)
      : n_(n), d_(d), h_(h), coords_(std::move(coords)), weights_(std::move(weights)),
        density_(std::move(density)) {
    require(n_ >= 1 && d_ > n_, "DiscreteMeasure: need 1 <= n < d");
    require(coords_.size() == weights_.size() * static_cast<std::size_t>(d_),
            "DiscreteMeasure: coordinate count does not match weights");
    require(density_.size() == weights_.size(), "DiscreteMeasure: density count does not match weights");
    for (double w : weights_) require(w > 0.0 && std::isfinite(w), "DiscreteMeasure: weights must be positive");
    for (double c : coords_) require(std::isfinite(c), "DiscreteMeasure: non-finite coordinate");
  }

  int n() const { return n_; }
  int d() const { return d_; }
  double h() const { return h_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_));
  }
  std::span<const double> base(std::size_t i) const { return point(i).first(static_cast<std::size_t>(n_)); }
  double weight(std::size_t i) const { return weights_[i]; }
  double density(std::size_t i) const { return density_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& densities() const { return density_; }
  const std::vector<double>& coords() const { return coords_; }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  /// Interactions are cut off at base distance tail_radius (symmetric in the pair),
  /// which realizes the principal value at infinity for measures with flat tails.
  double tail_radius() const { return tail_radius_; }
  void set_tail_radius(double r) {
    require(r > 0.0, "tail radius must be positive");
    tail_radius_ = r;
  }
  bool within_tail(std::span<const double> a, std::span<const double> b) const {
    if (!std::isfinite(tail_radius_)) return true;
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s <= tail_radius_ * tail_radius_;
  }

  /// Same points with weights multiplied by s (used for dilation experiments).
  DiscreteMeasure scaled(double coord_scale, double weight_scale) const {
    std::vector<double> c = coords_;
    for (double& v : c) v *= coord_scale;
    std::vector<double> w = weights_;
    for (double& v : w) v *= weight_scale;
    DiscreteMeasure out(n_, d_, std::move(c), std::move(w), density_, h_ * coord_scale);
    if (std::isfinite(tail_radius_)) out.set_tail_radius(tail_radius_ * coord_scale);
    return out;
  }

 private:
  int n_ = 1;
  int d_ = 2;
  double h_ = 0.0;
  double tail_radius_ = std::numeric_limits<double>::infinity();
  std::vector<double> coords_;
  std::vector<double> weights_;
  std::vector<double> density_;
};

using DensityFn = std::function<double(std::span<const double> point)>;

inline DensityFn unit_density() {
  return [](std::span<const double>) { return 1.0; };
}

namespace detail {

// sqrt(det(I + J^T J)) for the (d-n) x n Jacobian J of A, by central differences.
inline double area_factor(const LipschitzGraph& g, std::span<const double> base, double step) {
  const int n = g.n();
  const int m = g.codim();
  Eigen::MatrixXd jac(m, n);
  std::vector<double> probe(base.begin(), base.end());
  std::vector<double> plus(static_cast<std::size_t>(m)), minus(static_cast<std::size_t>(m));
  for (int j = 0; j < n; ++j) {
    probe[j] = base[j] + step;
    g.eval(probe, plus);
    probe[j] = base[j] - step;
    g.eval(probe, minus);
    probe[j] = base[j];
    for (int i = 0; i < m; ++i) jac(i, j) = (plus[i] - minus[i]) / (2.0 * step);
  }
  if (n == 1) return std::sqrt(1.0 + jac.col(0).squaredNorm());
  const Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(n, n) + jac.transpose() * jac;
  return std::sqrt(gram.determinant());
}

}  // namespace detail

/// One point per grid cell of side h at (x~_c, A(x~_c)); weight f(x_c) h^n sqrt(det(I + DA^T DA)).
inline DiscreteMeasure sample_measure(const LipschitzGraph& graph, const VCube& base, double h,
                                      const DensityFn& f) {
  require(h > 0.0 && std::isfinite(h), "sample_measure: h must be positive");
  require(base.dim() == graph.n(), "sample_measure: base cube dimension does not match graph");
  const double cells_real = base.side() / h;
  const long cells = std::lround(cells_real);
  require(cells >= 1, "sample_measure: empty base");
  require(std::abs(cells_real - static_cast<double>(cells)) <= 1e-9 * std::max(1.0, cells_real),
          "sample_measure: h must divide the base side");
  const int n = graph.n();
  const int d = graph.d();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(cells);
  std::vector<double> coords;
  coords.reserve(total * static_cast<std::size_t>(d));
  std::vector<double> weights;
  weights.reserve(total);
  std::vector<double> density;
  density.reserve(total);
  const double cell_volume = std::pow(h, n);
  std::vector<double> center(static_cast<std::size_t>(n));
  std::vector<double> point(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for (int i = n - 1; i >= 0; --i) {
      const auto idx = static_cast<double>(rem % static_cast<std::size_t>(cells));
      rem /= static_cast<std::size_t>(cells);
      center[i] = base.lo(i) + (idx + 0.5) * h;
    }
    std::copy(center.begin(), center.end(), point.begin());
    graph.eval(center, std::span<double>(point).subspan(static_cast<std::size_t>(n)));
    const double fx = f(point);
    if (!(fx > 0.0) || !std::isfinite(fx)) {
      throw InvalidArgument("sample_measure: density must be positive and finite");
    }
    const double jac = detail::area_factor(graph, center, h / 8.0);
    coords.insert(coords.end(), point.begin(), point.end());
    weights.push_back(fx * cell_volume * jac);
    density.push_back(fx);
  }
  return DiscreteMeasure(n, d, std::move(coords), std::move(weights), std::move(density), h);
}

inline double mass(const DiscreteMeasure& mu, const VCube& region) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (region.contains(mu.base(i))) s += mu.weight(i);
  }
  return s;
}

/// Points inside (or, with complement = true, outside) the region; nullopt when nothing remains.
inline std::optional<DiscreteMeasure> restrict(const DiscreteMeasure& mu, const VCube& region,
                                               bool complement = false) {
  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<double> density;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (region.contains(mu.base(i)) == complement) continue;
    const auto p = mu.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    weights.push_back(mu.weight(i));
    density.push_back(mu.density(i));
  }
  if (weights.empty()) return std::nullopt;
  DiscreteMeasure out(mu.n(), mu.d(), std::move(coords), std::move(weights), std::move(density), mu.h());
  if (std::isfinite(mu.tail_radius())) out.set_tail_radius(mu.tail_radius());
  return out;
}

/// Dyadic descendants of root at generations m_min..m_max (generation-major,
/// lexicographic centers within a generation). Generation m has side root.side 2^-m.
inline std::vector<VCube> dyadic_cubes(const VCube& root, int m_min, int m_max) {
  require(m_min <= m_max, "dyadic_cubes: m_min must not exceed m_max");
  require(m_min >= 0, "dyadic_cubes: generations are relative to the root and must be >= 0");
  const int n = root.dim();
  std::vector<VCube> out;
  for (int m = m_min; m <= m_max; ++m) {
    const double side = std::ldexp(root.side(), -m);
    const std::size_t per_axis = std::size_t{1} << m;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= per_axis;
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t rem = k;
      std::vector<double> c(static_cast<std::size_t>(n));
      for (int i = n - 1; i >= 0; --i) {
        const auto idx = static_cast<double>(rem % per_axis);
        rem /= per_axis;
        c[i] = root.lo(i) + (idx + 0.5) * side;
      }
      out.emplace_back(std::move(c), side);
    }
  }
  return out;
}

/// The cell of the translated lattice D_m^a = {a + 2^-m (k + [0,1)^n)} containing x~.
inline VCube translated_cell(std::span<const double> a, int m, std::span<const double> base) {
  const double side = std::ldexp(1.0, -m);
  std::vector<double> lo(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double k = std::floor((base[i] - a[i]) / side);
    double l = a[i] + k * side;
    // Guard the floor against rounding at cell boundaries.
    if (base[i] < l) l -= side;
    else if (base[i] >= l + side) l += side;
    lo[i] = l;
  }
  return VCube::from_lower(std::move(lo), side);
}

/// Aggregates points into cubes of side h_coarse in R^d: the base lattice is anchored at
/// `anchor`, the vertical one at 0. Each cube becomes one point at its base center with the
/// weighted mean vertical position, so a flat measure coarsens onto exact cell centers.
/// Every unit of mass moves at most sqrt(d) h_coarse. Cells are in lexicographic order.
inline DiscreteMeasure coarsen(const DiscreteMeasure& mu, double h_coarse, std::span<const double> anchor) {
  require(h_coarse > 0.0, "coarsen: resolution must be positive");
  if (h_coarse <= mu.h() * (1.0 + 1e-12)) return mu;
  const int n = mu.n();
  const int d = mu.d();
  std::map<std::vector<long>, std::size_t> cell_index;
  std::vector<double> mass_acc;
  std::vector<double> moment_acc;
  std::vector<double> density_acc;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::vector<long> key(static_cast<std::size_t>(d));
    const auto p = mu.point(i);
    for (int j = 0; j < d; ++j) {
      const double origin = j < n ? anchor[j] : 0.0;
      key[j] = static_cast<long>(std::floor((p[j] - origin) / h_coarse));
    }
    auto [it, inserted] = cell_index.try_emplace(key, mass_acc.size());
    if (inserted) {
      mass_acc.push_back(0.0);
      density_acc.push_back(0.0);
      moment_acc.insert(moment_acc.end(), static_cast<std::size_t>(d), 0.0);
    }
    const std::size_t c = it->second;
    const double w = mu.weight(i);
    mass_acc[c] += w;
    density_acc[c] += w * mu.density(i);
    for (int j = n; j < d; ++j) moment_acc[c * static_cast<std::size_t>(d) + j] += w * p[j];
  }
  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<double> density;
  coords.reserve(moment_acc.size());
  for (const auto& [key, c] : cell_index) {
    for (int j = 0; j < n; ++j) coords.push_back(anchor[j] + (static_cast<double>(key[j]) + 0.5) * h_coarse);
    for (int j = n; j < d; ++j) coords.push_back(moment_acc[c * static_cast<std::size_t>(d) + j] / mass_acc[c]);
    weights.push_back(mass_acc[c]);
    density.push_back(density_acc[c] / mass_acc[c]);
  }
  DiscreteMeasure out(n, d, std::move(coords), std::move(weights), std::move(density), h_coarse);
  if (std::isfinite(mu.tail_radius())) out.set_tail_radius(mu.tail_radius());
  return out;
}

/// Largest sampled difference quotient |A(x) - A(y)| / |x - y| over a grid of base points.
inline double estimate_lip(const LipschitzGraph& g, const VCube& base, int samples_per_axis) {
  require(g.n() == 1, "estimate_lip: implemented for n = 1");
  double best = 0.0;
  std::vector<double> prev;
  double prev_x = 0.0;
  for (int k = 0; k <= samples_per_axis; ++k) {
    const double x = base.lo(0) + base.side() * k / samples_per_axis;
    const double xs[1] = {x};
    auto a = g.eval(xs);
    if (k > 0) {
      double da = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) da += (a[i] - prev[i]) * (a[i] - prev[i]);
      best = std::max(best, std::sqrt(da) / (x - prev_x));
    }
    prev = std::move(a);
    prev_x = x;
  }
  return best;
}

}  // namespace lipvar::geometry
