#pragma once

// Flatness coefficients: beta_p over the window C_Gamma Q, the localized transport
// distance dist_F, alpha over B_Q, and multiscale packing sums.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/optimize.hpp"
#include "lipvar/transport.hpp"

namespace lipvar::coefficients {

using geometry::DiscreteMeasure;
using geometry::VBall;
using geometry::VCube;

/// Affine n-plane: base point plus an orthonormal frame of n vectors in R^d.
struct Plane {
  std::vector<double> base;
  std::vector<std::vector<double>> frame;

  int d() const { return static_cast<int>(base.size()); }
  int n() const { return static_cast<int>(frame.size()); }

  double distance(std::span<const double> x) const {
    const int dd = d();
    std::vector<double> r(static_cast<std::size_t>(dd));
    for (int i = 0; i < dd; ++i) r[i] = x[i] - base[i];
    for (const auto& e : frame) {
      double t = 0.0;
      for (int i = 0; i < dd; ++i) t += r[i] * e[i];
      for (int i = 0; i < dd; ++i) r[i] -= t * e[i];
    }
    return norm2(r);
  }

  /// Largest |<e_i, e_j> - delta_ij|.
  double orthonormality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      for (std::size_t j = i; j < frame.size(); ++j) {
        double t = 0.0;
        for (int k = 0; k < d(); ++k) t += frame[i][k] * frame[j][k];
        worst = std::max(worst, std::abs(t - (i == j ? 1.0 : 0.0)));
      }
    }
    return worst;
  }

  /// Orthonormalizes the frame in place (modified Gram-Schmidt).
  void orthonormalize() {
    for (std::size_t i = 0; i < frame.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double t = 0.0;
        for (int k = 0; k < d(); ++k) t += frame[i][k] * frame[j][k];
        for (int k = 0; k < d(); ++k) frame[i][k] -= t * frame[j][k];
      }
      const double nrm = norm2(frame[i]);
      require(nrm > 1e-300, "Plane: degenerate frame");
      for (double& v : frame[i]) v /= nrm;
    }
  }

  /// Graph plane y = b + M (x~ - z~) over the first n coordinates; M is (d-n) x n row-major.
  static Plane graph(std::span<const double> z, std::span<const double> b, std::span<const double> m) {
    const int n = static_cast<int>(z.size());
    const int c = static_cast<int>(b.size());
    Plane p;
    p.base.assign(z.begin(), z.end());
    p.base.insert(p.base.end(), b.begin(), b.end());
    for (int j = 0; j < n; ++j) {
      std::vector<double> e(static_cast<std::size_t>(n + c), 0.0);
      e[j] = 1.0;
      for (int r = 0; r < c; ++r) e[n + r] = m[static_cast<std::size_t>(r * n + j)];
      p.frame.push_back(std::move(e));
    }
    p.orthonormalize();
    return p;
  }

  /// The coordinate plane R^n x {0} translated to pass through base.
  static Plane horizontal(std::span<const double> base, int n) {
    Plane p;
    p.base.assign(base.begin(), base.end());
    for (int j = 0; j < n; ++j) {
      std::vector<double> e(base.size(), 0.0);
      e[j] = 1.0;
      p.frame.push_back(std::move(e));
    }
    return p;
  }
};

/// Orthonormal basis of the orthogonal complement of the plane's frame.
inline std::vector<std::vector<double>> normal_basis(const Plane& p) {
  const int d = p.d();
  const int n = p.n();
  Eigen::MatrixXd f(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) f(i, j) = p.frame[j][i];
  }
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d) - f * f.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(proj);
  std::vector<std::vector<double>> out;
  for (int k = d - 1; k >= n; --k) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v[i] = es.eigenvectors()(i, k);
    out.push_back(std::move(v));
  }
  return out;
}

/// Perturbation of a reference plane: base moved by sum t_k nu_k, each frame vector
/// tilted by sum s_jk nu_k, then re-orthonormalized. Parameters: codim offsets followed
/// by n x codim tilts.
inline Plane perturb(const Plane& ref, const std::vector<std::vector<double>>& normals,
                     std::span<const double> params) {
  const int c = static_cast<int>(normals.size());
  const int d = ref.d();
  Plane p = ref;
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < d; ++i) p.base[i] += params[k] * normals[k][i];
  }
  for (int j = 0; j < ref.n(); ++j) {
    for (int k = 0; k < c; ++k) {
      const double s = params[static_cast<std::size_t>(c + j * c + k)];
      for (int i = 0; i < d; ++i) p.frame[j][i] += s * normals[k][i];
    }
  }
  p.orthonormalize();
  return p;
}

struct BetaResult {
  double beta = 0.0;
  Plane plane;
  double p = 2.0;
  bool degenerate = false;   // all window mass at one point
  double seed_spread = 0.0;  // |beta(beta_2 seed) - beta(axis seed)| for p = 1, inf
  double beta_upper = 0.0;   // worse of the two seeds
};

namespace detail {

struct Window {
  std::vector<double> coords;
  std::vector<double> weights;
  int d = 0;
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coords).subspan(i * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  }
  std::size_t size() const { return weights.size(); }
};

inline Window cube_window(const DiscreteMeasure& mu, const VCube& region) {
  Window w;
  w.d = mu.d();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) <= 0.0 || !region.contains(mu.base(i))) continue;
    const auto p = mu.point(i);
    w.coords.insert(w.coords.end(), p.begin(), p.end());
    w.weights.push_back(mu.weight(i));
  }
  return w;
}

inline double beta_of_plane(const Window& w, const Plane& plane, double p, double ell, int n) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) m = std::max(m, plane.distance(w.point(i)));
    return m / ell;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = plane.distance(w.point(i)) / ell;
    s += w.weights[i] * (p == 1.0 ? t : t * t);
  }
  s /= std::pow(ell, n);
  return p == 1.0 ? s : std::sqrt(s);
}

// Weighted centroid and top-n eigenvectors of the second-moment matrix.
inline std::optional<Plane> least_squares_plane(const Window& w, int n) {
  const int d = w.d;
  double total = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w.weights[i];
    for (int k = 0; k < d; ++k) mean(k) += w.weights[i] * w.point(i)[k];
  }
  mean /= total;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < w.size(); ++i) {
    Eigen::VectorXd r(d);
    for (int k = 0; k < d; ++k) r(k) = w.point(i)[k] - mean(k);
    m += w.weights[i] * r * r.transpose();
  }
  Plane p;
  p.base.assign(mean.data(), mean.data() + d);
  if (m.norm() <= 1e-300) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  for (int j = 0; j < n; ++j) {
    const int col = d - 1 - j;  // eigenvalues ascend
    std::vector<double> e(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) e[k] = es.eigenvectors()(k, col);
    p.frame.push_back(std::move(e));
  }
  return p;
}

inline Plane axis_plane(const Window& w, int n) {
  std::vector<double> c(static_cast<std::size_t>(w.d), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w.weights[i];
    for (int k = 0; k < w.d; ++k) c[k] += w.weights[i] * w.point(i)[k];
  }
  for (double& v : c) v /= total;
  return Plane::horizontal(c, n);
}

}  // namespace detail

/// beta_{p,mu}(Q) over the window C_Gamma Q, normalized by l(Q).
inline BetaResult beta(const DiscreteMeasure& mu, const VCube& q, double p, double window_const) {
  require(p == 1.0 || p == 2.0 || std::isinf(p), "beta: p must be 1, 2 or inf");
  require(window_const > 0.0, "beta: window constant must be positive");
  const int n = mu.n();
  const double ell = q.side();
  const auto w = detail::cube_window(mu, q.dilate(window_const));
  if (w.size() == 0) throw InvalidArgument("beta: empty window");
  BetaResult res;
  res.p = p;
  auto ls = detail::least_squares_plane(w, n);
  if (!ls) {
    res.degenerate = true;
    res.plane = detail::axis_plane(w, n);
    return res;
  }
  res.plane = *ls;
  res.beta = detail::beta_of_plane(w, *ls, p, ell, n);
  if (p == 2.0) {
    res.beta_upper = res.beta;
    return res;
  }
  // Local refinement from two seeds.
  auto refine = [&](const Plane& seed) {
    const auto normals = normal_basis(seed);
    const std::size_t dim = normals.size() * static_cast<std::size_t>(n + 1);
    std::vector<double> x0(dim, 0.0);
    std::vector<double> step(dim, 0.05);
    for (std::size_t k = 0; k < normals.size(); ++k) step[k] = 0.05 * ell;
    auto f = [&](std::span<const double> t) { return detail::beta_of_plane(w, perturb(seed, normals, t), p, ell, n); };
    const auto r = optimize::nelder_mead(f, x0, step, 1e-10, 2000);
    Plane best = perturb(seed, normals, r.x);
    double val = detail::beta_of_plane(w, best, p, ell, n);
    const double at_seed = detail::beta_of_plane(w, seed, p, ell, n);
    if (at_seed < val) {
      best = seed;
      val = at_seed;
    }
    return std::pair<double, Plane>(val, best);
  };
  auto a = refine(*ls);
  auto b = refine(detail::axis_plane(w, n));
  res.seed_spread = std::abs(a.first - b.first);
  res.beta_upper = std::max(a.first, b.first);
  if (a.first <= b.first) {
    res.beta = a.first;
    res.plane = a.second;
  } else {
    res.beta = b.first;
    res.plane = b.second;
  }
  return res;
}

/// Region F for dist_F: a Euclidean ball in R^d or a vertical ball B(z~, r) x R^{d-n}.
struct Region {
  enum class Kind { ball, vball };
  Kind kind = Kind::vball;
  std::vector<double> center;
  double radius = 0.0;

  static Region ball(std::vector<double> c, double r) { return Region{Kind::ball, std::move(c), r}; }
  static Region vball(const VBall& b) { return Region{Kind::vball, b.center, b.radius}; }

  /// dist(x, F^c), zero outside F.
  double depth(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
      const double t = x[i] - center[i];
      s += t * t;
    }
    return std::max(0.0, radius - std::sqrt(s));
  }
};

namespace detail {

inline transport::WeightedCloud cloud_of(const DiscreteMeasure& mu) {
  transport::WeightedCloud c;
  c.dim = mu.d();
  c.coords = mu.coords();
  c.weights = mu.weights();
  return c;
}

inline std::vector<double> depths(const transport::WeightedCloud& c, const Region& f) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = f.depth(c.point(i));
  return out;
}

}  // namespace detail

/// Exact dist_F(mu_a, mu_b) by the transport linear program.
inline double bl_distance(const DiscreteMeasure& mu_a, const DiscreteMeasure& mu_b, const Region& f) {
  require(mu_a.d() == mu_b.d(), "bl_distance: dimension mismatch");
  require(f.radius > 0.0, "bl_distance: region must have nonempty interior");
  const auto a = detail::cloud_of(mu_a);
  const auto b = detail::cloud_of(mu_b);
  return transport::localized_w1(a, detail::depths(a, f), b, detail::depths(b, f));
}

struct AlphaOptions {
  double window_const = 0.0;   // C_Gamma; <= 0 selects default_window_constant(n, lip_hint)
  double lip_hint = 1.0;
  int resolution_divisor = 8;  // transport is solved at resolution max(h, l(Q)/divisor)
  int max_plane_evaluations = 40;
  double c_rel_tol = 1e-4;     // relative optimality gap certified for the c search
  int max_c_iterations = 30;
  double early_exit = 0.01;    // stop the plane search once alpha <= early_exit * tol
};

struct AlphaResult {
  double alpha = 0.0;
  Plane plane;
  double c = 0.0;
  double transport = 0.0;
  double tol = 0.0;          // h_eff / l(Q)
  double seed_spread = 0.0;  // alpha difference between the two plane seeds
  int lp_solves = 0;
};

namespace detail {

// c-free part of the flat comparison measure: cell centers of the lattice anchored at
// `anchor` with base in the ball, lifted to the graph plane, weights h^n sqrt(det(I + M^T M)).
struct FlatSkeleton {
  std::vector<double> base;  // base coordinates of the cell centers
  double h = 0.0;
  int n = 0;
};

inline FlatSkeleton flat_skeleton(const VBall& ball, double h, std::span<const double> anchor) {
  FlatSkeleton s;
  s.h = h;
  s.n = static_cast<int>(ball.center.size());
  const int n = s.n;
  std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    lo[i] = static_cast<long>(std::floor((ball.center[i] - ball.radius - anchor[i]) / h)) - 1;
    hi[i] = static_cast<long>(std::ceil((ball.center[i] + ball.radius - anchor[i]) / h)) + 1;
  }
  std::vector<long> idx = lo;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (;;) {
    for (int i = 0; i < n; ++i) x[i] = anchor[i] + (static_cast<double>(idx[i]) + 0.5) * h;
    if (ball.contains(x)) s.base.insert(s.base.end(), x.begin(), x.end());
    int k = n - 1;
    while (k >= 0 && ++idx[k] > hi[k]) {
      idx[k] = lo[k];
      --k;
    }
    if (k < 0) break;
  }
  return s;
}

inline double graph_area_factor(std::span<const double> m, int n, int c) {
  Eigen::MatrixXd mm(c, n);
  for (int r = 0; r < c; ++r) {
    for (int j = 0; j < n; ++j) mm(r, j) = m[static_cast<std::size_t>(r * n + j)];
  }
  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n) + mm.transpose() * mm;
  return std::sqrt(g.determinant());
}

}  // namespace detail

/// alpha_mu(Q) = inf_{c, L} dist_{B_Q}(mu, c H^n_L) / l(Q)^{n+1}, B_Q = B(z~_Q, C_Gamma l(Q)) x R^{d-n}.
/// Planes are searched as graphs y = b + M (x~ - z~_Q) from two seeds (least-squares plane
/// of the window and the horizontal plane through its centroid).
inline AlphaResult alpha(const DiscreteMeasure& mu, const VCube& q, const AlphaOptions& opt = {}) {
  const int n = mu.n();
  const int d = mu.d();
  const int c = d - n;
  const double ell = q.side();
  const double cg = opt.window_const > 0.0 ? opt.window_const : geometry::default_window_constant(n, opt.lip_hint);
  require(opt.resolution_divisor >= 1, "alpha: resolution divisor must be >= 1");
  AlphaResult res;
  const double h_eff = std::max(mu.h(), ell / opt.resolution_divisor);
  res.tol = h_eff / ell;
  if (geometry::mass(mu, q) <= 0.0) return res;

  const VBall ball = geometry::window_ball(q, cg);
  std::vector<double> anchor(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) anchor[i] = q.lo(i);

  // Window measure at the working resolution.
  std::vector<double> wc;
  std::vector<double> ww;
  std::vector<double> wdens;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!ball.contains(mu.base(i))) continue;
    const auto p = mu.point(i);
    wc.insert(wc.end(), p.begin(), p.end());
    ww.push_back(mu.weight(i));
    wdens.push_back(mu.density(i));
  }
  if (ww.empty()) throw InvalidArgument("alpha: empty support window");
  const DiscreteMeasure local = geometry::coarsen(DiscreteMeasure(n, d, wc, ww, wdens, mu.h()), h_eff, anchor);
  transport::WeightedCloud mu_cloud = detail::cloud_of(local);
  std::vector<double> mu_depth(mu_cloud.size());
  for (std::size_t i = 0; i < mu_cloud.size(); ++i) mu_depth[i] = ball.depth(mu_cloud.point(i));
  double mu_mass = 0.0;
  for (double w : ww) mu_mass += w;

  const auto skel = detail::flat_skeleton(ball, h_eff, anchor);
  const std::size_t ks = skel.base.size() / static_cast<std::size_t>(n);
  std::vector<double> flat_depth(ks);
  for (std::size_t k = 0; k < ks; ++k) {
    flat_depth[k] = ball.depth(std::span<const double>(skel.base).subspan(k * n, n));
  }
  const double cell = std::pow(h_eff, n);
  const auto z = q.center();

  auto flat_cloud = [&](std::span<const double> b, std::span<const double> m, double cval) {
    transport::WeightedCloud f;
    f.dim = d;
    f.coords.reserve(ks * static_cast<std::size_t>(d));
    const double w = cval * cell * detail::graph_area_factor(m, n, c);
    for (std::size_t k = 0; k < ks; ++k) {
      const auto x = std::span<const double>(skel.base).subspan(k * n, n);
      f.coords.insert(f.coords.end(), x.begin(), x.end());
      for (int r = 0; r < c; ++r) {
        double y = b[r];
        for (int j = 0; j < n; ++j) y += m[static_cast<std::size_t>(r * n + j)] * (x[j] - z[j]);
        f.coords.push_back(y);
      }
      f.weights.push_back(w);
    }
    return f;
  };

  int solves = 0;
  transport::ArcHint hint;
  struct Cut {
    double a;  // sum g_i mu_i
    double b;  // sum g_j u_j, u the flat measure at c = 1
    double at(double cv) const { return a - cv * b; }
  };
  // phi(c) = max over feasible g of (a(g) - c b(g)); each solve returns one tight cut.
  auto solve_at = [&](const transport::WeightedCloud& unit, double cv) {
    ++solves;
    transport::WeightedCloud f = unit;
    for (double& w : f.weights) w *= cv;
    const auto sol = transport::localized_w1_solve(mu_cloud, mu_depth, f, flat_depth, 10, &hint);
    Cut cut{0.0, 0.0};
    for (std::size_t i = 0; i < mu_cloud.size(); ++i) cut.a += sol.dual_a[i] * mu_cloud.weights[i];
    for (std::size_t j = 0; j < unit.size(); ++j) cut.b += sol.dual_b[j] * unit.weights[j];
    return std::pair<double, Cut>(sol.value, cut);
  };

  struct Inner {
    double value;
    double c;
  };
  // Kelley's cutting planes on the convex piecewise-linear function phi(c), c >= 0,
  // started from the mass-matching c. g = +-dist(., F^c) give the two initial cuts.
  auto inner = [&](std::span<const double> b, std::span<const double> m) {
    const auto unit = flat_cloud(b, m, 1.0);
    double unit_mass = 0.0;
    for (double w : unit.weights) unit_mass += w;
    const double c0 = unit_mass > 0.0 ? mu_mass / unit_mass : 0.0;
    std::vector<Cut> cuts;
    {
      Cut r{0.0, 0.0};
      for (std::size_t i = 0; i < mu_cloud.size(); ++i) r.a += mu_depth[i] * mu_cloud.weights[i];
      for (std::size_t j = 0; j < unit.size(); ++j) r.b += flat_depth[j] * unit.weights[j];
      cuts.push_back(r);
      cuts.push_back(Cut{-r.a, -r.b});
    }
    auto [v0, cut0] = solve_at(unit, c0);
    Inner best{v0, c0};
    cuts.push_back(cut0);
    auto model = [&](double cv) {
      double v = -std::numeric_limits<double>::infinity();
      for (const auto& k : cuts) v = std::max(v, k.at(cv));
      return v;
    };
    for (int it = 0; it < opt.max_c_iterations; ++it) {
      double arg = 0.0;
      double low = model(0.0);
      for (std::size_t i = 0; i < cuts.size(); ++i) {
        for (std::size_t j = i + 1; j < cuts.size(); ++j) {
          const double db = cuts[i].b - cuts[j].b;
          if (db == 0.0) continue;
          const double x = (cuts[i].a - cuts[j].a) / db;
          if (!(x >= 0.0) || !std::isfinite(x)) continue;
          const double v = model(x);
          if (v < low) {
            low = v;
            arg = x;
          }
        }
      }
      if (best.value - low <= opt.c_rel_tol * best.value + 1e-14 * cuts.front().a) break;
      auto [v, cut] = solve_at(unit, arg);
      cuts.push_back(cut);
      if (v < best.value) best = Inner{v, arg};
    }
    return best;
  };

  const std::size_t dim = static_cast<std::size_t>(c * (n + 1));
  const double scale = std::pow(ell, n + 1);
  Inner best_seen{std::numeric_limits<double>::infinity(), 0.0};
  std::vector<double> best_t;
  auto objective = [&](std::span<const double> t) {
    const Inner r = inner(t.first(c), t.subspan(c));
    if (r.value < best_seen.value) {
      best_seen = r;
      best_t.assign(t.begin(), t.end());
    }
    return r.value;
  };

  std::vector<std::vector<double>> seeds;
  {
    detail::Window w;
    w.d = d;
    w.coords = local.coords();
    w.weights = local.weights();
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    double tot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      tot += w.weights[i];
      for (int k = 0; k < d; ++k) mean[k] += w.weights[i] * w.point(i)[k];
    }
    for (double& v : mean) v /= tot;
    auto as_graph = [&](const Plane& p) -> std::optional<std::vector<double>> {
      // Express the plane as y = b + M (x~ - z~) by solving for the base-coordinate block.
      Eigen::MatrixXd fb(n, n), fv(c, n);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) fb(i, j) = p.frame[j][i];
        for (int r = 0; r < c; ++r) fv(r, j) = p.frame[j][n + r];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(fb);
      if (!lu.isInvertible() || std::abs(fb.determinant()) < 1e-8) return std::nullopt;
      const Eigen::MatrixXd m = fv * lu.inverse();
      std::vector<double> t(dim);
      for (int r = 0; r < c; ++r) {
        double y = p.base[n + r];
        for (int j = 0; j < n; ++j) y += m(r, j) * (z[j] - p.base[j]);
        t[r] = y;
        for (int j = 0; j < n; ++j) t[static_cast<std::size_t>(c + r * n + j)] = m(r, j);
      }
      return t;
    };
    if (auto ls = detail::least_squares_plane(w, n)) {
      if (auto t = as_graph(*ls)) seeds.push_back(*t);
    }
    std::vector<double> flat(dim, 0.0);
    for (int r = 0; r < c; ++r) flat[r] = mean[n + r];
    seeds.push_back(flat);
  }

  std::vector<double> step(dim, 0.05);
  for (int r = 0; r < c; ++r) step[r] = 0.05 * ell;
  double worst_seed = 0.0;
  const int per_seed = std::max(4, opt.max_plane_evaluations / static_cast<int>(seeds.size()));
  const double good_enough = opt.early_exit * res.tol * scale;
  for (const auto& s : seeds) {
    const double at_seed = objective(s);
    if (best_seen.value <= good_enough) {
      worst_seed = std::max(worst_seed, at_seed);
      break;
    }
    const auto r = optimize::nelder_mead(objective, s, step, 1e-3 * res.tol, per_seed);
    worst_seed = std::max(worst_seed, std::min(at_seed, r.value));
  }
  const std::span<const double> bt(best_t);
  res.transport = best_seen.value;
  res.c = best_seen.c;
  res.alpha = best_seen.value / scale;
  res.seed_spread = (worst_seed - best_seen.value) / scale;
  res.plane = Plane::graph(z, bt.first(c), bt.subspan(c));
  res.lp_solves = solves;
  return res;
}

struct PackingOptions {
  int max_depth = 3;
  bool use_beta = true;
  bool use_alpha = true;
  double c2 = 1.0;  // beta evaluated on C2 Q
  double c3 = 1.0;  // alpha evaluated on C3 Q
  double beta_window = 0.0;  // <= 0 selects default_window_constant(n, lip_hint)
  AlphaOptions alpha;
  int jobs = 0;
};

struct CubeCoefficients {
  int gen = 0;
  VCube cube;
  double mass = 0.0;
  double beta2 = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  double alpha_tol = 0.0;
};

struct PackingResult {
  double sum = 0.0;
  std::vector<double> per_generation;
  std::vector<CubeCoefficients> cubes;
};

inline CubeCoefficients cube_coefficients(const DiscreteMeasure& mu, const VCube& q, int gen,
                                          const PackingOptions& opt) {
  CubeCoefficients row;
  row.gen = gen;
  row.cube = q;
  row.mass = geometry::mass(mu, q);
  if (row.mass <= 0.0) return row;
  const double bw =
      opt.beta_window > 0.0 ? opt.beta_window : geometry::default_window_constant(mu.n(), opt.alpha.lip_hint);
  if (opt.use_beta) row.beta2 = beta(mu, q.dilate(opt.c2), 2.0, bw).beta;
  if (opt.use_alpha) {
    const auto a = alpha(mu, q.dilate(opt.c3), opt.alpha);
    row.alpha = a.alpha;
    row.c = a.c;
    row.alpha_tol = a.tol;
  }
  return row;
}

/// sum over dyadic Q under root with l(Q) >= 2^{-max_depth} l(root) of
/// (beta_2(C2 Q)^2 + alpha(C3 Q)^2) mu(Q), with per-generation subtotals.
inline PackingResult packing_sum(const DiscreteMeasure& mu, const VCube& root, const PackingOptions& opt) {
  require(opt.max_depth >= 0, "packing_sum: max_depth must be >= 0");
  require(std::ldexp(root.side(), -opt.max_depth) >= 4.0 * mu.h() * (1.0 - 1e-12),
          "packing_sum: the finest cubes must have side at least 4h");
  const auto cubes = geometry::dyadic_cubes(root, 0, opt.max_depth);
  std::vector<int> gens;
  for (int m = 0; m <= opt.max_depth; ++m) {
    std::size_t count = 1;
    for (int i = 0; i < root.dim(); ++i) count <<= m;
    gens.insert(gens.end(), count, m);
  }
  PackingResult res;
  res.cubes.resize(cubes.size());
  parallel_for(
      cubes.size(), [&](std::size_t k) { res.cubes[k] = cube_coefficients(mu, cubes[k], gens[k], opt); }, opt.jobs);
  res.per_generation.assign(static_cast<std::size_t>(opt.max_depth + 1), 0.0);
  for (const auto& row : res.cubes) {
    const double term = (row.beta2 * row.beta2 + row.alpha * row.alpha) * row.mass;
    res.per_generation[static_cast<std::size_t>(row.gen)] += term;
  }
  for (double v : res.per_generation) res.sum += v;
  return res;
}

struct RatioReport {
  double max_ratio = 0.0;
  std::vector<double> ratios;
  int skipped = 0;
};

/// beta_1(Q) / alpha(Q) over the cubes with alpha above its discretization tolerance.
inline RatioReport beta1_vs_alpha(const DiscreteMeasure& mu, std::span<const VCube> cubes, const AlphaOptions& opt) {
  RatioReport rep;
  std::vector<double> r(cubes.size(), -1.0);
  parallel_for(cubes.size(), [&](std::size_t k) {
    if (geometry::mass(mu, cubes[k]) <= 0.0) return;
    const auto a = alpha(mu, cubes[k], opt);
    if (a.alpha <= a.tol) return;
    const double cg = opt.window_const > 0.0 ? opt.window_const : geometry::default_window_constant(mu.n(), opt.lip_hint);
    r[k] = beta(mu, cubes[k], 1.0, cg).beta / a.alpha;
  });
  for (double v : r) {
    if (v < 0.0) {
      ++rep.skipped;
      continue;
    }
    rep.ratios.push_back(v);
    rep.max_ratio = std::max(rep.max_ratio, v);
  }
  return rep;
}

}  // namespace lipvar::coefficients
