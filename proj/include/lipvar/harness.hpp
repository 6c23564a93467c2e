#pragma once

// Experiment plumbing: norms, test functions, operator ratios, refinement sweeps,
// endpoint diagnostics, the Cotlar constant, and pointwise invariant checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/kernels.hpp"
#include "lipvar/martingale.hpp"
#include "lipvar/transforms.hpp"
#include "lipvar/variation.hpp"

namespace lipvar::harness {

using geometry::DiscreteMeasure;
using geometry::VCube;
using kernels::CZKernel;
using transforms::EpsGrid;

struct EpsGridSpec {
  double eps_max = 0.5;
  double eps_min = 1.0 / 32.0;
  int per_octave = 8;

  EpsGrid build() const { return EpsGrid::log_uniform(eps_max, eps_min, per_octave); }
};

struct ExperimentConfig {
  geometry::FamilySpec graph;
  std::string kernel = "cauchy1";
  double rho = 3.0;
  double p = 2.0;
  EpsGridSpec eps;
  int eval_points = 64;
  std::vector<double> resolutions{1.0 / 256.0, 1.0 / 512.0};
  std::uint64_t seed = 1;
  bool diagnostic = false;
  VCube sample_window{{0.5}, 3.0};  // base region carrying the measure
  VCube eval_window{{0.5}, 1.0};    // base region of the evaluation points
  VCube test_cube{{0.5}, 1.0};      // support of indicator / atom test functions
  double tail_radius = std::numeric_limits<double>::infinity();
  std::vector<double> window_boundaries;  // oscillation windows; empty selects dyadic

  void validate() const {
    require(rho >= 1.0, "config: rho must be >= 1");
    if (!diagnostic) require(rho > 2.0, "config: rho must exceed 2 outside diagnostic mode");
    require(p >= 1.0, "config: p must be >= 1");
    require(eval_points >= 1, "config: eval_points must be >= 1");
    require(!resolutions.empty(), "config: resolutions must not be empty");
    for (std::size_t i = 1; i < resolutions.size(); ++i) {
      require(resolutions[i] < resolutions[i - 1], "config: resolutions must be strictly decreasing");
    }
    require(sample_window.dim() == graph.n && eval_window.dim() == graph.n && test_cube.dim() == graph.n,
            "config: window dimensions must equal n");
    const EpsGrid grid = eps.build();
    grid.validate_for(resolutions.front());
  }
};

inline double graph_lip(const geometry::FamilySpec& s) {
  switch (s.kind) {
    case geometry::FamilyKind::flat:
      return 0.0;
    case geometry::FamilyKind::sawtooth:
    case geometry::FamilyKind::corner:
      return s.slope;
    case geometry::FamilyKind::multiscale:
      return s.lip;
    case geometry::FamilyKind::from_samples:
      return s.declared_lip.value_or(0.0);
  }
  return 0.0;
}

/// "cauchy1", "cauchy2", or "rieszI" for the I-th coordinate.
inline CZKernel make_kernel(const std::string& id, int n, int d) {
  if (id == "cauchy1" || id == "cauchy2") {
    require(n == 1 && d == 2, "kernel: the Cauchy components need n = 1, d = 2");
    return kernels::cauchy_component(id == "cauchy1" ? 1 : 2);
  }
  if (id.rfind("riesz", 0) == 0 && id.size() > 5) {
    return kernels::riesz_component(std::stoi(id.substr(5)), n, d);
  }
  throw InvalidArgument("kernel: unknown kernel id '" + id + "'");
}

/// The graph measure at resolution h over the sample window, with the configured tail.
inline DiscreteMeasure build_measure(const ExperimentConfig& cfg, double h) {
  const auto g = geometry::build_graph(cfg.graph);
  DiscreteMeasure mu = geometry::sample_measure(g, cfg.sample_window, h, geometry::unit_density());
  if (std::isfinite(cfg.tail_radius)) mu.set_tail_radius(cfg.tail_radius);
  return mu;
}

/// (sum w_i |v_i|^p)^{1/p}; p = inf gives max |v_i| over points of positive weight.
inline double lp_norm(const DiscreteMeasure& mu, std::span<const double> values, double p) {
  require(values.size() == mu.size(), "lp_norm: one value per support point required");
  require(p >= 1.0, "lp_norm: p must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "lp_norm: non-finite value");
    const double a = std::abs(values[i]);
    if (std::isinf(p)) {
      if (mu.weight(i) > 0.0) s = std::max(s, a);
    } else {
      s += mu.weight(i) * (p == 1.0 ? a : std::pow(a, p));
    }
  }
  if (std::isinf(p) || p == 1.0) return s;
  return std::pow(s, 1.0 / p);
}

enum class TestKind { indicator, h1_atom, rademacher, bounded_random };

inline constexpr std::size_t kRandomBlocksPerAxis = 32;

inline std::string test_kind_name(TestKind k) {
  switch (k) {
    case TestKind::indicator:
      return "indicator";
    case TestKind::h1_atom:
      return "atom";
    case TestKind::rademacher:
      return "rademacher";
    case TestKind::bounded_random:
      return "bounded_random";
  }
  return "?";
}

inline TestKind parse_test_kind(const std::string& s) {
  if (s == "indicator") return TestKind::indicator;
  if (s == "atom" || s == "h1_atom") return TestKind::h1_atom;
  if (s == "rademacher") return TestKind::rademacher;
  if (s == "bounded_random") return TestKind::bounded_random;
  throw InvalidArgument("unknown test function '" + s + "'");
}

/// Values of the test function at every support point. Indicator and atom live on cube;
/// the random kinds cover the points with base in cube and vanish elsewhere.
inline std::vector<double> test_function(const DiscreteMeasure& mu, TestKind kind, const VCube& cube,
                                         std::uint64_t seed) {
  std::vector<double> f(mu.size(), 0.0);
  switch (kind) {
    case TestKind::indicator: {
      double m = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        if (cube.contains(mu.base(i))) {
          f[i] = 1.0;
          m += mu.weight(i);
        }
      }
      require(m > 0.0, "indicator: cube has zero mass");
      break;
    }
    case TestKind::h1_atom: {
      // +t/mu(L) on the lower half along the first axis, -t/mu(R) on the upper half,
      // t = min(mu(L), mu(R)) / mu(D), so |f| <= 1/mu(D) and the mean vanishes.
      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      double ml = 0.0;
      double mr = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!cube.contains(mu.base(i))) continue;
        if (mu.base(i)[0] < cube.center()[0]) {
          left.push_back(i);
          ml += mu.weight(i);
        } else {
          right.push_back(i);
          mr += mu.weight(i);
        }
      }
      if (!(ml > 0.0) || !(mr > 0.0)) throw InvalidArgument("h1_atom: cube too small to split");
      const double t = std::min(ml, mr) / (ml + mr);
      for (std::size_t i : left) f[i] = t / ml;
      for (std::size_t i : right) f[i] = -t / mr;
      // Cancel the rounding residual of the mean on the heaviest point of the right block.
      double resid = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) resid += mu.weight(i) * f[i];
      std::size_t heavy = right.front();
      for (std::size_t i : right) {
        if (mu.weight(i) > mu.weight(heavy)) heavy = i;
      }
      f[heavy] -= resid / mu.weight(heavy);
      break;
    }
    case TestKind::rademacher:
    case TestKind::bounded_random: {
      // One seeded draw per block of a fixed dyadic grid on the cube, so the function does
      // not change when h is refined.
      const int n = mu.n();
      std::size_t blocks = 1;
      for (int k = 0; k < n; ++k) blocks *= kRandomBlocksPerAxis;
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> value(blocks);
      for (auto& v : value) v = kind == TestKind::rademacher ? ((rng() >> 63) != 0u ? 1.0 : -1.0) : u(rng);
      const double step = cube.side() / kRandomBlocksPerAxis;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto b = mu.base(i);
        if (!cube.contains(b)) continue;
        std::size_t idx = 0;
        for (int k = 0; k < n; ++k) {
          const double lo = cube.center()[k] - 0.5 * cube.side();
          const auto j = std::clamp<long>(static_cast<long>(std::floor((b[k] - lo) / step)), 0L,
                                          static_cast<long>(kRandomBlocksPerAxis) - 1);
          idx = idx * kRandomBlocksPerAxis + static_cast<std::size_t>(j);
        }
        f[i] = value[idx];
      }
      break;
    }
  }
  return f;
}

struct EvalPoint {
  std::size_t index = 0;  // support index
  double weight = 0.0;    // mass of the stratum the point represents
};

/// Deterministic stratified subsample: the window is cut into s^n congruent cells with
/// s^n >= count (s = ceil(count^{1/n})); each nonempty cell contributes the support point
/// nearest its center, weighted by the cell's mass.
inline std::vector<EvalPoint> evaluation_points(const DiscreteMeasure& mu, const VCube& window, int count) {
  require(count >= 1, "evaluation_points: count must be >= 1");
  const int n = mu.n();
  const int s = static_cast<int>(std::ceil(std::pow(static_cast<double>(count), 1.0 / n) - 1e-9));
  const double side = window.side() / s;
  std::size_t cells = 1;
  for (int i = 0; i < n; ++i) cells *= static_cast<std::size_t>(s);
  std::vector<double> mass(cells, 0.0);
  std::vector<double> best(cells, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> arg(cells, 0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto b = mu.base(i);
    if (!window.contains(b)) continue;
    std::size_t cell = 0;
    double dist2 = 0.0;
    for (int k = 0; k < n; ++k) {
      long idx = static_cast<long>(std::floor((b[k] - window.lo(k)) / side));
      idx = std::clamp(idx, 0L, static_cast<long>(s - 1));
      cell = cell * static_cast<std::size_t>(s) + static_cast<std::size_t>(idx);
      const double c = window.lo(k) + (static_cast<double>(idx) + 0.5) * side;
      dist2 += (b[k] - c) * (b[k] - c);
    }
    mass[cell] += mu.weight(i);
    if (dist2 < best[cell]) {
      best[cell] = dist2;
      arg[cell] = i;
    }
  }
  std::vector<EvalPoint> out;
  for (std::size_t c = 0; c < cells; ++c) {
    if (mass[c] > 0.0) out.push_back(EvalPoint{arg[c], mass[c]});
  }
  require(!out.empty(), "evaluation_points: window holds no support points");
  return out;
}

/// (V_rho o T_phi) f at support point x over the grid.
inline double variation_of_transform(const CZKernel& kernel, const DiscreteMeasure& mu, std::span<const double> f,
                                     std::span<const double> x, const EpsGrid& grid, double rho) {
  const auto fam = transforms::sample_family(kernel, mu, f, x, grid, transforms::Mode::smooth);
  return variation::rho_variation(fam, rho).value;
}

/// Pointwise values of (V_rho o T_phi) f at the evaluation points.
inline std::vector<double> variation_profile(const CZKernel& kernel, const DiscreteMeasure& mu,
                                             std::span<const double> f, std::span<const EvalPoint> pts,
                                             const EpsGrid& grid, double rho, int jobs = 0) {
  std::vector<double> out(pts.size(), 0.0);
  parallel_for(
      pts.size(),
      [&](std::size_t k) { out[k] = variation_of_transform(kernel, mu, f, mu.point(pts[k].index), grid, rho); },
      jobs);
  return out;
}

inline double weighted_lp(std::span<const double> values, std::span<const EvalPoint> pts, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (std::isinf(p)) s = std::max(s, std::abs(values[k]));
    else s += pts[k].weight * std::pow(std::abs(values[k]), p);
  }
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

struct RatioRecord {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  double h = 0.0;
  std::string function;
  std::size_t witness = 0;  // support index of the largest pointwise value
};

/// ||(V_rho o T_phi) f||_{L^p} over the stratified evaluation points divided by ||f||_{L^p(mu)}.
inline RatioRecord operator_ratio(const ExperimentConfig& cfg, const DiscreteMeasure& mu, std::span<const double> f,
                                  const std::string& label = "", int jobs = 0) {
  RatioRecord r;
  r.h = mu.h();
  r.function = label;
  r.denominator = lp_norm(mu, f, cfg.p);
  if (!(r.denominator > 0.0)) throw InvalidArgument("operator_ratio: f has zero norm");
  const EpsGrid grid = cfg.eps.build();
  grid.validate_for(mu.h());
  const auto kernel = make_kernel(cfg.kernel, mu.n(), mu.d());
  const auto pts = evaluation_points(mu, cfg.eval_window, cfg.eval_points);
  const auto vals = variation_profile(kernel, mu, f, pts, grid, cfg.rho, jobs);
  r.numerator = weighted_lp(vals, pts, cfg.p);
  r.ratio = r.numerator / r.denominator;
  std::size_t best = 0;
  for (std::size_t k = 1; k < vals.size(); ++k) {
    if (vals[k] > vals[best]) best = k;
  }
  r.witness = pts[best].index;
  return r;
}

/// max over successive pairs of max(a/b, b/a).
inline double stability_factor(std::span<const double> values) {
  double f = 1.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double a = values[i - 1];
    const double b = values[i];
    if (a == 0.0 && b == 0.0) continue;
    if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
    f = std::max(f, std::max(a / b, b / a));
  }
  return f;
}

struct SweepResult {
  std::vector<RatioRecord> records;  // resolution-major, then test function
  std::vector<double> stability;     // per test function
};

/// operator_ratio at every configured resolution for each test function.
inline SweepResult refinement_sweep(const ExperimentConfig& cfg, std::span<const TestKind> kinds, int jobs = 0) {
  cfg.validate();
  require(cfg.resolutions.size() >= 2, "refinement_sweep: need at least two resolutions");
  SweepResult res;
  std::vector<std::vector<double>> per_kind(kinds.size());
  for (double h : cfg.resolutions) {
    const auto mu = build_measure(cfg, h);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto f = test_function(mu, kinds[k], cfg.test_cube, cfg.seed);
      auto rec = operator_ratio(cfg, mu, f, test_kind_name(kinds[k]), jobs);
      per_kind[k].push_back(rec.ratio);
      res.records.push_back(std::move(rec));
    }
  }
  for (const auto& v : per_kind) res.stability.push_back(stability_factor(v));
  return res;
}

struct EndpointReport {
  double atom_integral = 0.0;
  double bmo_oscillation = 0.0;
  double weak_l1_profile = 0.0;
  std::vector<double> lambdas;
  std::vector<double> jump_norms;
};

/// Test functions fed to the endpoint diagnostics.
struct EndpointInputs {
  std::vector<double> atom;
  std::vector<double> bounded;
  std::vector<double> indicator;
};

/// Endpoint diagnostics on mu: the atom integral, the BMO oscillation of (V_rho o T_phi) f
/// for the bounded f over dyadic subcubes of the evaluation window, the weak-L1 profile and
/// the lambda-jump norms for the indicator-type f.
inline EndpointReport endpoint_diagnostics(const ExperimentConfig& cfg, const DiscreteMeasure& mu,
                                           const EndpointInputs& in, int jobs = 0) {
  const auto kernel = make_kernel(cfg.kernel, mu.n(), mu.d());
  const EpsGrid grid = cfg.eps.build();
  grid.validate_for(mu.h());
  const auto pts = evaluation_points(mu, cfg.eval_window, cfg.eval_points);
  EndpointReport rep;

  const auto va = variation_profile(kernel, mu, in.atom, pts, grid, cfg.rho, jobs);
  for (std::size_t k = 0; k < pts.size(); ++k) rep.atom_integral += pts[k].weight * va[k];

  const auto vb = variation_profile(kernel, mu, in.bounded, pts, grid, cfg.rho, jobs);
  for (const auto& q : geometry::dyadic_cubes(cfg.eval_window, 0, 2)) {
    double m = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!q.contains(mu.base(pts[k].index))) continue;
      m += pts[k].weight;
      s += pts[k].weight * vb[k];
    }
    if (!(m > 0.0)) continue;
    const double avg = s / m;
    double dev = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (q.contains(mu.base(pts[k].index))) dev += pts[k].weight * std::abs(vb[k] - avg);
    }
    rep.bmo_oscillation = std::max(rep.bmo_oscillation, dev / m);
  }

  const auto& ind = in.indicator;
  const double l1 = lp_norm(mu, ind, 1.0);
  std::vector<std::vector<double>> fams(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        fams[k] = transforms::sample_family(kernel, mu, ind, mu.point(pts[k].index), grid, transforms::Mode::smooth)
                      .values;
      },
      jobs);
  std::vector<double> vi(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) vi[k] = variation::rho_variation(fams[k], cfg.rho).value;
  // sup_lambda lambda mu{g > lambda}: attained in the limit lambda -> g_k from below.
  std::vector<std::size_t> order(pts.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vi[a] > vi[b]; });
  double mass_above = 0.0;
  for (std::size_t k : order) {
    mass_above += pts[k].weight;
    if (l1 > 0.0) rep.weak_l1_profile = std::max(rep.weak_l1_profile, vi[k] * mass_above / l1);
  }
  double vmax = 0.0;
  for (const auto& fam : fams) {
    const auto [lo, hi] = std::minmax_element(fam.begin(), fam.end());
    vmax = std::max(vmax, *hi - *lo);
  }
  const double fnorm = lp_norm(mu, ind, cfg.p);
  for (int i = 1; i <= 8 && vmax > 0.0 && fnorm > 0.0; ++i) {
    const double lambda = vmax * std::ldexp(1.0, -i);
    std::vector<double> nl(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      nl[k] = std::pow(static_cast<double>(variation::lambda_jumps(fams[k], lambda)), 1.0 / cfg.rho);
    }
    rep.lambdas.push_back(lambda);
    rep.jump_norms.push_back(weighted_lp(nl, pts, cfg.p) * lambda / fnorm);
  }
  return rep;
}

/// Endpoint diagnostics at resolution h with the configured atom, bounded random f on the
/// evaluation window, and indicator of the test cube.
inline EndpointReport endpoint_diagnostics(const ExperimentConfig& cfg, double h, int jobs = 0) {
  cfg.validate();
  const auto mu = build_measure(cfg, h);
  EndpointInputs in{test_function(mu, TestKind::h1_atom, cfg.test_cube, cfg.seed),
                    test_function(mu, TestKind::bounded_random, cfg.eval_window, cfg.seed),
                    test_function(mu, TestKind::indicator, cfg.test_cube, cfg.seed)};
  return endpoint_diagnostics(cfg, mu, in, jobs);
}

struct CotlarRecord {
  double c0 = 0.0;
  std::size_t witness_point = 0;
  double witness_eps = 0.0;
};

/// Smallest C0 with T_eps f <= T_{phi_eps} f + C0 M f over the evaluation points and grid.
inline CotlarRecord cotlar_check(const ExperimentConfig& cfg, const DiscreteMeasure& mu, std::span<const double> f,
                                 int jobs = 0) {
  const auto kernel = make_kernel(cfg.kernel, mu.n(), mu.d());
  const EpsGrid grid = cfg.eps.build();
  grid.validate_for(mu.h());
  const auto pts = evaluation_points(mu, cfg.eval_window, cfg.eval_points);
  const auto scales = transforms::dyadic_scales(mu.h(), cfg.sample_window.side());
  std::vector<CotlarRecord> local(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        const auto x = mu.point(pts[k].index);
        const auto sharp = transforms::sample_family(kernel, mu, f, x, grid, transforms::Mode::sharp);
        const auto smooth = transforms::sample_family(kernel, mu, f, x, grid, transforms::Mode::smooth);
        const double mf = transforms::hl_maximal(mu, f, x, scales);
        for (std::size_t e = 0; e < grid.size(); ++e) {
          const double excess = sharp.values[e] - smooth.values[e];
          if (excess <= 0.0) continue;
          if (!(mf > 0.0)) throw ComputationError("cotlar_check: maximal function vanishes at a witness");
          const double c = excess / mf;
          if (c > local[k].c0) local[k] = CotlarRecord{c, pts[k].index, grid[e]};
        }
      },
      jobs);
  CotlarRecord best;
  for (const auto& r : local) {
    if (r.c0 > best.c0) best = r;
  }
  return best;
}

/// cotlar_check at resolution h for the indicator of the test cube.
inline CotlarRecord cotlar_check(const ExperimentConfig& cfg, double h, int jobs = 0) {
  cfg.validate();
  const auto mu = build_measure(cfg, h);
  const auto f = test_function(mu, TestKind::indicator, cfg.test_cube, cfg.seed);
  return cotlar_check(cfg, mu, f, jobs);
}

struct FamilyInequalityReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();  // largest lhs - rhs seen
  std::string worst_name;
};

/// Checks O <= V_2, S <= V_2, lambda N_lambda^{1/rho} <= V_rho (rho in {2, 2.5, 3}) over a
/// lambda ladder, and V_3 <= V_2.5 <= V_2 on one sampled family, each with the given slack.
inline void check_family_inequalities(std::span<const double> values, std::span<const double> eps,
                                      const variation::WindowSpec& windows, double slack,
                                      FamilyInequalityReport& rep) {
  const double v2 = variation::rho_variation(values, 2.0).value;
  const double v25 = variation::rho_variation(values, 2.5).value;
  const double v3 = variation::rho_variation(values, 3.0).value;
  auto check = [&](const char* name, double lhs, double rhs) {
    ++rep.checked;
    const double gap = lhs - rhs;
    if (gap > rep.worst) {
      rep.worst = gap;
      rep.worst_name = name;
    }
    if (gap > slack) ++rep.violations;
  };
  check("oscillation<=V2", variation::oscillation(values, eps, windows), v2);
  check("short<=V2", variation::short_variation(values, eps), v2);
  check("V3<=V2.5", v3, v25);
  check("V2.5<=V2", v25, v2);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = values.empty() ? 0.0 : *hi - *lo;
  for (int i = 1; i <= 6 && range > 0.0; ++i) {
    const double lambda = range * std::ldexp(1.0, -i);
    const double n = variation::lambda_jumps(values, lambda);
    check("jumps<=V2", lambda * std::sqrt(n), v2);
    check("jumps<=V2.5", lambda * std::pow(n, 1.0 / 2.5), v25);
    check("jumps<=V3", lambda * std::cbrt(n), v3);
  }
}

struct InvariantResult {
  std::string name;
  double max_violation = 0.0;  // largest amount by which the inequality fails (<= 0 means it holds)
  double constant = 0.0;       // recorded empirical constant where the invariant has one
  std::size_t checked = 0;
};

/// Sublinearity, positivity, and difference domination of V_rho o T_phi on random f, g.
inline std::vector<InvariantResult> check_sublinearity(const ExperimentConfig& cfg, const DiscreteMeasure& mu,
                                                       int trials, int jobs = 0) {
  const auto kernel = make_kernel(cfg.kernel, mu.n(), mu.d());
  const EpsGrid grid = cfg.eps.build();
  const auto pts = evaluation_points(mu, cfg.eval_window, cfg.eval_points);
  InvariantResult sub{"sublinearity", -std::numeric_limits<double>::infinity(), 0.0, 0};
  InvariantResult pos{"positivity", -std::numeric_limits<double>::infinity(), 0.0, 0};
  InvariantResult dom{"difference_domination", -std::numeric_limits<double>::infinity(), 0.0, 0};
  for (int t = 0; t < trials; ++t) {
    const auto f = test_function(mu, TestKind::bounded_random, cfg.test_cube, cfg.seed + 2 * t);
    const auto g = test_function(mu, TestKind::bounded_random, cfg.test_cube, cfg.seed + 2 * t + 1);
    std::vector<double> sum(f.size()), diff(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      sum[i] = f[i] + g[i];
      diff[i] = f[i] - g[i];
    }
    const auto vf = variation_profile(kernel, mu, f, pts, grid, cfg.rho, jobs);
    const auto vg = variation_profile(kernel, mu, g, pts, grid, cfg.rho, jobs);
    const auto vs = variation_profile(kernel, mu, sum, pts, grid, cfg.rho, jobs);
    const auto vd = variation_profile(kernel, mu, diff, pts, grid, cfg.rho, jobs);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      sub.max_violation = std::max(sub.max_violation, vs[k] - vf[k] - vg[k]);
      pos.max_violation = std::max(pos.max_violation, -std::min({vf[k], vg[k], vs[k], vd[k]}));
      dom.max_violation = std::max(dom.max_violation, std::abs(vf[k] - vg[k]) - vd[k]);
      sub.checked++;
      pos.checked++;
      dom.checked++;
    }
  }
  return {sub, pos, dom};
}

/// Localization constant: int_D ((V_rho o T_phi) f)^2 dmu / (||f||_inf^2 mu(D)) for f
/// supported on D. f is a seeded +-1 pattern constant on the 8^n subcubes of D, so it does
/// not change with h (pointwise noise would average out under refinement).
inline InvariantResult check_localization(const ExperimentConfig& cfg, const DiscreteMeasure& mu, const VCube& d_cube,
                                          int jobs = 0) {
  const auto kernel = make_kernel(cfg.kernel, mu.n(), mu.d());
  const EpsGrid grid = cfg.eps.build();
  const auto cells = geometry::dyadic_cubes(d_cube, 3, 3);
  std::vector<double> sign(cells.size());
  std::mt19937_64 rng(cfg.seed);
  for (double& v : sign) v = (rng() >> 63) != 0u ? 1.0 : -1.0;
  std::vector<double> f(mu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].contains(mu.base(i))) {
        f[i] = sign[c];
        break;
      }
    }
  }
  const auto pts = evaluation_points(mu, d_cube, cfg.eval_points);
  const auto v = variation_profile(kernel, mu, f, pts, grid, cfg.rho, jobs);
  double integral = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) integral += pts[k].weight * v[k] * v[k];
  double finf = 0.0;
  for (double x : f) finf = std::max(finf, std::abs(x));
  InvariantResult r{"localization", 0.0, 0.0, pts.size()};
  r.constant = integral / (finf * finf * geometry::mass(mu, d_cube));
  return r;
}

/// Pointwise decomposition chain V_rho(K phi * mu)(x) <= C (S mu + W mu + V_rho(E mu))(x);
/// records the smallest C over the evaluation points.
inline InvariantResult check_decomposition_chain(const ExperimentConfig& cfg, const martingale::MartingaleEngine& engine,
                                                 const martingale::MartingaleConfig& mcfg, int jobs = 0) {
  const auto& mu = engine.measure();
  const EpsGrid grid = cfg.eps.build();
  const auto pts = evaluation_points(mu, cfg.eval_window, cfg.eval_points);
  const std::vector<double> ones(mu.size(), 1.0);
  std::vector<double> ratio(pts.size(), 0.0);
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        const auto x = mu.point(pts[k].index);
        const auto fam = transforms::sample_family(engine.kernel(), mu, ones, x, grid, transforms::Mode::smooth);
        const double lhs = variation::rho_variation(fam, cfg.rho).value;
        const double s = variation::short_variation(fam);
        const double w = martingale::w_diagnostic(engine, x, mcfg).value;
        std::vector<double> em;
        for (int m = mcfg.m_min; m <= mcfg.m_max; ++m) em.push_back(engine.averaged(m, x, mcfg.grid_points).value);
        const double ve = variation::rho_variation(em, cfg.rho).value;
        const double rhs = s + w + ve;
        ratio[k] = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      },
      jobs);
  InvariantResult r{"decomposition_chain", 0.0, 0.0, pts.size()};
  for (double v : ratio) r.constant = std::max(r.constant, v);
  return r;
}

}  // namespace lipvar::harness
