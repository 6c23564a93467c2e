// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero when any
// criterion fails. `acceptance 3 7` runs only criteria 3 and 7.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lipvar/lipvar.hpp"
#include "oracles.hpp"

using namespace lipvar;
using namespace lipvar::geometry;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

DiscreteMeasure graph_measure(const FamilySpec& spec, double lo, double side, double h) {
  return sample_measure(build_graph(spec), VCube::from_lower({lo}, side), h, unit_density());
}

std::vector<double> random_family(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> small(-3, 3);
  std::vector<double> v(n);
  const int k = kind(rng);
  for (double& x : v) x = (k == 0) ? u(rng) : (k == 1 ? small(rng) : small(rng) * 0.5);
  return v;
}

// ---- 1
Outcome variation_exactness() {
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<int> len(1, 12);
  double worst_var = 0.0;
  double worst_osc = 0.0;
  int count_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto v = random_family(rng, static_cast<std::size_t>(len(rng)));
    for (double rho : {1.0, 2.0, 2.5, 3.0}) {
      const double got = variation::rho_variation(v, rho).value;
      const double want = oracle::variation(v, rho);
      worst_var = std::max(worst_var, std::abs(got - want) / std::max(1.0, want));
    }
    std::vector<double> values(v);
    std::sort(values.begin(), values.end());
    for (double lambda : {0.25, 0.5, 1.0, 1.5, 3.0}) {
      if (variation::lambda_jumps(v, lambda) != oracle::jumps(v, lambda)) ++count_mismatch;
    }
    for (auto [a, b] : {std::pair{-0.5, 0.5}, std::pair{0.0, 1.0}, std::pair{-1.0, 1.5}}) {
      if (variation::upcrossings(v, a, b) != oracle::upcrossings(v, a, b)) ++count_mismatch;
    }
    std::vector<double> eps;
    for (std::size_t k = 0; k < v.size(); ++k) eps.push_back(std::exp2(-static_cast<double>(k) / 3.0));
    for (const auto& w : {variation::WindowSpec::dyadic(1.0, eps.back()),
                          variation::WindowSpec::geometric(1.0, 0.3, eps.back())}) {
      const double got = variation::oscillation(v, eps, w);
      const double want = oracle::oscillation(v, eps, w.boundaries());
      worst_osc = std::max(worst_osc, std::abs(got - want) / std::max(1.0, want));
    }
  }
  Outcome o;
  o.passed = worst_var <= 1e-12 && worst_osc <= 1e-12 && count_mismatch == 0;
  o.detail = "1000 families; max rel err V_rho " + fmt("%.1e", worst_var) + ", oscillation " +
             fmt("%.1e", worst_osc) + "; jump/upcrossing count mismatches " + std::to_string(count_mismatch);
  return o;
}

// ---- 2
Outcome closed_form_transform() {
  const auto k = kernels::cauchy_component(1);
  double worst = 0.0;
  double ratio_lo = oracle::kInf;
  double ratio_hi = 0.0;
  for (double xt : {1.5, 2.0, 4.0}) {
    const double x[2] = {xt, 0.0};
    const double exact = oracle::cauchy_segment(xt);
    double prev_sharp = 0.0;
    double prev_smooth = 0.0;
    for (int e : {10, 11}) {
      const auto mu = graph_measure(FamilySpec{}, 0.0, 1.0, std::ldexp(1.0, -e));
      const std::vector<double> f(mu.size(), 1.0);
      const double es = std::abs(transforms::truncated_sharp(k, mu, f, x, 0.25) - exact);
      const double em = std::abs(transforms::truncated_smooth(k, mu, f, x, 0.1) - exact);
      if (e == 10) {
        worst = std::max({worst, es, em});
        prev_sharp = es;
        prev_smooth = em;
      } else {
        for (double r : {prev_sharp / es, prev_smooth / em}) {
          ratio_lo = std::min(ratio_lo, r);
          ratio_hi = std::max(ratio_hi, r);
        }
      }
    }
  }
  const bool accurate = worst <= 2e-3;
  const bool halves = ratio_lo >= 2.0 / 1.3 && ratio_hi <= 2.0 * 1.3;
  Outcome o;
  o.passed = accurate && halves;
  o.detail = "max |err| at h=2^-10 " + fmt("%.2e", worst) + " (bound 2e-3 " + (accurate ? "met" : "missed") +
             "); err(h)/err(h/2) in [" + fmt("%.3f", ratio_lo) + ", " + fmt("%.3f", ratio_hi) +
             "], expected 2 +-30%" + (halves ? "" : ": midpoint sampling converges at second order");
  return o;
}

// ---- 3
Outcome inequality_suite() {
  harness::FamilyInequalityReport rep;
  std::size_t families = 0;
  const std::vector<FamilySpec> graphs{FamilySpec{}, FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
                                       FamilySpec{.kind = FamilyKind::corner, .slope = 2.0, .corner_at = 0.5}};
  const std::vector<harness::TestKind> kinds{harness::TestKind::indicator, harness::TestKind::h1_atom,
                                             harness::TestKind::rademacher};
  for (const auto& g : graphs) {
    harness::ExperimentConfig cfg;
    cfg.graph = g;
    const auto grid = cfg.eps.build();
    const std::vector<variation::WindowSpec> windows{
        variation::WindowSpec::dyadic(cfg.eps.eps_max, cfg.eps.eps_min),
        variation::WindowSpec::geometric(cfg.eps.eps_max, 0.3, cfg.eps.eps_min),
        variation::WindowSpec({0.5, 0.4, 0.15, 0.06, 1.0 / 32})};
    for (double h : cfg.resolutions) {
      const auto mu = harness::build_measure(cfg, h);
      const auto kernel = harness::make_kernel(cfg.kernel, mu.n(), mu.d());
      const auto pts = harness::evaluation_points(mu, cfg.eval_window, cfg.eval_points);
      for (auto kind : kinds) {
        const auto f = harness::test_function(mu, kind, cfg.test_cube, cfg.seed);
        std::vector<transforms::SampledFamily> fams(pts.size());
        parallel_for(pts.size(), [&](std::size_t i) {
          fams[i] = transforms::sample_family(kernel, mu, f, mu.point(pts[i].index), grid, transforms::Mode::smooth);
        });
        for (const auto& fam : fams) {
          for (const auto& w : windows) harness::check_family_inequalities(fam.values, grid.values(), w, 1e-9, rep);
          ++families;
        }
      }
    }
  }
  Outcome o;
  o.passed = rep.violations == 0 && rep.checked > 0;
  o.detail = std::to_string(families) + " families, " + std::to_string(rep.checked) + " inequalities, " +
             std::to_string(rep.violations) + " violations; largest lhs-rhs " + fmt("%.2e", rep.worst) +
             (rep.worst_name.empty() ? "" : " (" + rep.worst_name + ")");
  return o;
}

std::vector<FamilySpec> builtin_graphs() {
  SampleTable table;
  for (int k = 0; k <= 64; ++k) {
    const double x = -2.0 + k / 16.0;
    table.rows.push_back({x, 0.5 * std::sin(2.0 * x)});
  }
  return {FamilySpec{},
          FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
          FamilySpec{.kind = FamilyKind::corner, .slope = 2.0, .corner_at = 0.1},
          FamilySpec{.kind = FamilyKind::multiscale, .lip = 1.0, .seed = 5},
          FamilySpec{.kind = FamilyKind::from_samples, .table = table, .declared_lip = 1.0}};
}

// ---- 4
Outcome martingale_structure() {
  double worst_tower = 0.0;
  double worst_lambda = 0.0;
  std::size_t cells = 0;
  std::size_t forms = 0;
  for (const auto& spec : builtin_graphs()) {
    const auto mu = graph_measure(spec, -1.0, 2.0, 1.0 / 64);
    for (const auto& k : {kernels::cauchy_component(1), kernels::cauchy_component(2)}) {
      const VCube root = VCube::from_lower({-0.75}, 1.0);
      for (int m = 0; m < 3; ++m) {
        for (const auto& parent : dyadic_cubes(root, m, m)) {
          double children = 0.0;
          for (const auto& c : dyadic_cubes(parent, 1, 1)) {
            children += mass(mu, c) * martingale::conditional_avg(mu, k, c);
          }
          const double whole = mass(mu, parent) * martingale::conditional_avg(mu, k, parent);
          worst_tower = std::max(worst_tower, std::abs(children - whole) / std::max(1.0, std::abs(whole)));
          ++cells;
        }
      }
      martingale::MartingaleConfig cfg;
      for (int m = 1; m <= 3; ++m) {
        for (double x0 : {-0.21, 0.05, 0.37}) {
          const std::vector<double> x{x0, build_graph(spec).eval(std::vector<double>{x0})[0]};
          const double avg = martingale::averaged_term(mu, k, m, x, cfg).value;
          const double lam = martingale::lambda_form(mu, k, m, x, cfg.grid_points);
          worst_lambda = std::max(worst_lambda, std::abs(lam - avg) / std::max(1.0, std::abs(avg)));
          ++forms;
        }
      }
    }
  }
  Outcome o;
  o.passed = worst_tower <= 1e-12 && worst_lambda <= 1e-9;
  o.detail = "tower over " + std::to_string(cells) + " cells, max rel defect " + fmt("%.1e", worst_tower) +
             "; Lambda form vs E_m average over " + std::to_string(forms) + " cases, max rel diff " +
             fmt("%.1e", worst_lambda);
  return o;
}

// ---- 5
Outcome flat_annihilation() {
  double worst = 0.0;  // largest value / (10 h / l)
  std::string where;
  std::size_t checks = 0;
  auto note = [&](double value, double h, double ell, const std::string& what) {
    const double r = std::abs(value) / (10.0 * h / ell);
    ++checks;
    if (r > worst) {
      worst = r;
      where = what;
    }
  };
  for (double h : {1.0 / 64, 1.0 / 128}) {
    auto mu = graph_measure(FamilySpec{}, -24.0, 48.0, h);
    coefficients::PackingOptions po;
    po.max_depth = 3;
    po.alpha.lip_hint = 0.0;
    const auto res = coefficients::packing_sum(mu, VCube::from_lower({0.0}, 1.0), po);
    for (const auto& c : res.cubes) {
      note(c.alpha, h, c.cube.side(), "alpha");
      note(c.beta2, h, c.cube.side(), "beta2");
    }
    mu.set_tail_radius(1.5);
    martingale::MartingaleConfig cfg;
    const auto grid = transforms::EpsGrid::log_uniform(0.5, 1.0 / 16, 4);
    const auto pts = harness::evaluation_points(mu, VCube::from_lower({0.0}, 1.0), 64);
    for (const auto& k : {kernels::cauchy_component(1), kernels::cauchy_component(2)}) {
      const martingale::MartingaleEngine engine(mu, k);
      for (const auto& p : pts) {
        const auto x = mu.point(p.index);
        const auto prof = martingale::w_diagnostic(engine, x, cfg);
        for (const auto& e : prof.entries) note(e.em, h, std::ldexp(1.0, -e.m), "E_m");
        note(prof.value, h, std::ldexp(1.0, -cfg.m_max), "W");
        note(martingale::s_diagnostic(mu, k, x, grid), h, grid.values().back(), "S");
      }
    }
  }
  Outcome o;
  o.passed = worst <= 1.0;
  o.detail = std::to_string(checks) + " values at h in {2^-6, 2^-7}; max value/(10h/l) " + fmt("%.2e", worst) +
             (where.empty() ? "" : " (" + where + ")");
  return o;
}

// ---- 6
Outcome lepingle() {
  double worst = 1.0;
  std::ostringstream vals;
  bool finite = true;
  for (double lip : {0.5, 1.0}) {
    const FamilySpec spec{.kind = FamilyKind::sawtooth, .slope = lip};
    const VCube p({0.0}, 1.0);
    double base = 0.0;
    for (double h : {1.0 / 64, 1.0 / 128}) {
      const auto mu = graph_measure(spec, -2.0, 4.0, h);
      const martingale::MartingaleEngine engine(mu, kernels::cauchy_component(1));
      for (int g : {4, 8}) {
        martingale::MartingaleConfig cfg;
        cfg.grid_points = g;
        const double r = martingale::lepingle_ratio(engine, p, cfg, 3.0).ratio;
        finite = finite && std::isfinite(r) && r > 0.0;
        if (base == 0.0) base = r;
        worst = std::max(worst, harness::stability_factor(std::vector<double>{base, r}));
        vals << " " << fmt("%.4f", r);
      }
    }
  }
  Outcome o;
  o.passed = finite && worst <= 2.0;
  o.detail = "ratios (Lip 0.5 then 1; h, G = (2^-6,4) (2^-6,8) (2^-7,4) (2^-7,8)):" + vals.str() +
             "; max factor " + fmt("%.3f", worst);
  return o;
}

// ---- 7
Outcome square_function_shape() {
  double worst = 1.0;
  std::ostringstream vals;
  bool finite = true;
  for (const auto& spec : {FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
                           FamilySpec{.kind = FamilyKind::corner, .slope = 1.0}}) {
    std::vector<double> wr;
    std::vector<double> sr;
    for (double h : {1.0 / 64, 1.0 / 128}) {
      const auto mu = graph_measure(spec, -8.0, 16.0, h);
      const auto k = kernels::cauchy_component(1);
      const VCube p({0.0}, 1.0);
      const martingale::MartingaleEngine engine(mu, k);
      martingale::MartingaleConfig cfg;
      const auto grid = transforms::EpsGrid::log_uniform(1.0, 1.0 / 16, 4);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        if (p.contains(mu.base(i))) idx.push_back(i);
      }
      std::vector<double> wv(idx.size());
      std::vector<double> sv(idx.size());
      parallel_for(idx.size(), [&](std::size_t j) {
        const auto x = mu.point(idx[j]);
        wv[j] = martingale::w_diagnostic(engine, x, cfg).value;
        sv[j] = martingale::s_diagnostic(mu, k, x, grid);
      });
      double w2 = 0.0;
      double s2 = 0.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        w2 += wv[j] * wv[j] * mu.weight(idx[j]);
        s2 += sv[j] * sv[j] * mu.weight(idx[j]);
      }
      coefficients::PackingOptions po;
      po.max_depth = 2;
      po.beta_window = 4.0;
      po.alpha.window_const = 4.0;
      po.alpha.resolution_divisor = 4;
      po.alpha.max_plane_evaluations = 6;
      const double pack = coefficients::packing_sum(mu, p, po).sum;
      wr.push_back(w2 / pack);
      sr.push_back(s2 / pack);
      finite = finite && std::isfinite(w2 / pack) && std::isfinite(s2 / pack) && pack > 0.0;
    }
    worst = std::max({worst, harness::stability_factor(wr), harness::stability_factor(sr)});
    vals << " " << detail::kind_name(spec.kind) << " W " << fmt("%.4g", wr[0]) << "->" << fmt("%.4g", wr[1]) << " S "
         << fmt("%.4g", sr[0]) << "->" << fmt("%.4g", sr[1]) << ";";
  }
  Outcome o;
  o.passed = finite && worst <= 2.0;
  o.detail = "norm^2 / packing at h 2^-6 -> 2^-7:" + vals.str() + " max factor " + fmt("%.3f", worst);
  return o;
}

// ---- 8
Outcome operator_ratio_stability() {
  harness::ExperimentConfig cfg;
  cfg.graph = FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0};
  cfg.kernel = "cauchy1";
  cfg.rho = 3.0;
  cfg.p = 2.0;
  cfg.resolutions = {1.0 / 256, 1.0 / 512, 1.0 / 1024};
  cfg.validate();
  const auto grid = cfg.eps.build();
  const std::vector<variation::WindowSpec> windows{
      variation::WindowSpec::dyadic(cfg.eps.eps_max, cfg.eps.eps_min),
      variation::WindowSpec::geometric(cfg.eps.eps_max, 0.3, cfg.eps.eps_min),
      variation::WindowSpec({0.5, 0.4, 0.15, 0.06, 1.0 / 32})};
  const std::vector<harness::TestKind> kinds{harness::TestKind::indicator, harness::TestKind::h1_atom,
                                             harness::TestKind::rademacher};
  // series[kind][0] is the variation ratio, series[kind][1 + w] the oscillation ratio for window spec w.
  std::vector<std::vector<std::vector<double>>> series(kinds.size(),
                                                       std::vector<std::vector<double>>(1 + windows.size()));
  for (double h : cfg.resolutions) {
    const auto mu = harness::build_measure(cfg, h);
    const auto kernel = harness::make_kernel(cfg.kernel, mu.n(), mu.d());
    const auto pts = harness::evaluation_points(mu, cfg.eval_window, cfg.eval_points);
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
      const auto f = harness::test_function(mu, kinds[ki], cfg.test_cube, cfg.seed);
      const double fn = harness::lp_norm(mu, f, cfg.p);
      std::vector<std::vector<double>> vals(1 + windows.size(), std::vector<double>(pts.size()));
      parallel_for(pts.size(), [&](std::size_t i) {
        const auto fam =
            transforms::sample_family(kernel, mu, f, mu.point(pts[i].index), grid, transforms::Mode::smooth);
        vals[0][i] = variation::rho_variation(fam, cfg.rho).value;
        for (std::size_t w = 0; w < windows.size(); ++w) vals[1 + w][i] = variation::oscillation(fam, windows[w]);
      });
      for (std::size_t s = 0; s < vals.size(); ++s) series[ki][s].push_back(harness::weighted_lp(vals[s], pts, cfg.p) / fn);
    }
  }
  double worst = 1.0;
  std::ostringstream vals;
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    for (const auto& s : series[ki]) worst = std::max(worst, harness::stability_factor(s));
    vals << " " << harness::test_kind_name(kinds[ki]) << " " << fmt("%.4f", series[ki][0][0]) << "->"
         << fmt("%.4f", series[ki][0][1]) << "->" << fmt("%.4f", series[ki][0][2]) << ";";
  }
  Outcome o;
  o.passed = worst <= 2.0;
  o.detail = "V_3 ratio at h 2^-8, 2^-9, 2^-10:" + vals.str() +
             " max factor over V_3 and 3 oscillation window specs " + fmt("%.3f", worst);
  return o;
}

// ---- 9
Outcome corner_packing() {
  // Roots of several sizes, each containing the corner at a different relative position.
  // C_Gamma = 4 keeps the cubes below the corner scale (2^g >= 2 C_Gamma) within depth 6.
  const double window = 4.0;
  const int depth = 6;
  const int first_below = 3;
  const std::vector<VCube> roots{VCube({0.0}, 1.0),   VCube({0.25}, 1.0),  VCube({0.5}, 1.0),
                                 VCube({-0.375}, 1.0), VCube({0.0}, 2.0),   VCube({0.75}, 2.0),
                                 VCube({0.0}, 0.5),   VCube({0.125}, 0.5)};
  const auto graph = build_graph(FamilySpec{.kind = FamilyKind::corner, .slope = 1.0});
  double worst_ratio = 0.0;
  double lo = oracle::kInf;
  double hi = 0.0;
  for (const auto& r : roots) {
    const double h = r.side() / 256.0;
    const double reach = 2.0 * window * r.side() + 2.0;
    const auto mu = sample_measure(graph, VCube::from_lower({r.center()[0] - reach}, 2.0 * reach), h, unit_density());
    coefficients::PackingOptions po;
    po.max_depth = depth;
    po.beta_window = window;
    po.alpha.window_const = window;
    po.alpha.resolution_divisor = 4;
    po.alpha.max_plane_evaluations = 6;
    const auto res = coefficients::packing_sum(mu, r, po);
    for (int g = first_below; g <= depth; ++g) {
      const double prev = res.per_generation[static_cast<std::size_t>(g - 1)];
      worst_ratio = std::max(worst_ratio, res.per_generation[static_cast<std::size_t>(g)] / prev);
    }
    const double per_mass = res.sum / mass(mu, r);
    lo = std::min(lo, per_mass);
    hi = std::max(hi, per_mass);
  }
  Outcome o;
  o.passed = worst_ratio <= 0.7 && hi / lo <= 10.0;
  o.detail = "C_Gamma 4, depth 6, 8 roots; max subtotal ratio for generations >= 3: " + fmt("%.3f", worst_ratio) +
             "; total/mu(R) in [" + fmt("%.4g", lo) + ", " + fmt("%.4g", hi) + "], spread " + fmt("%.2f", hi / lo);
  return o;
}

// ---- 10
DiscreteMeasure atoms(const std::vector<std::vector<double>>& pts, const std::vector<double>& w) {
  std::vector<double> coords;
  for (const auto& p : pts) coords.insert(coords.end(), p.begin(), p.end());
  return DiscreteMeasure(1, 2, coords, w, std::vector<double>(w.size(), 1.0), 0.0);
}

Outcome transport_lp() {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> count(2, 30);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::uniform_real_distribution<double> wdist(0.05, 1.0);
  std::bernoulli_distribution on(0.6);
  double sym = 0.0;
  double tri = 0.0;
  const auto f = coefficients::Region::ball({0.1, -0.1}, 1.4);
  for (int t = 0; t < 200; ++t) {
    const int n = count(rng);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < n; ++i) pts.push_back({coord(rng), coord(rng)});
    std::vector<DiscreteMeasure> ms;
    for (int m = 0; m < 3; ++m) {
      std::vector<std::vector<double>> p;
      std::vector<double> w;
      for (int i = 0; i < n; ++i) {
        if (on(rng)) {
          p.push_back(pts[static_cast<std::size_t>(i)]);
          w.push_back(wdist(rng));
        }
      }
      if (p.empty()) {
        p.push_back(pts[0]);
        w.push_back(0.5);
      }
      ms.push_back(atoms(p, w));
    }
    const double ab = coefficients::bl_distance(ms[0], ms[1], f);
    const double ba = coefficients::bl_distance(ms[1], ms[0], f);
    const double bc = coefficients::bl_distance(ms[1], ms[2], f);
    const double ac = coefficients::bl_distance(ms[0], ms[2], f);
    sym = std::max(sym, std::abs(ab - ba));
    tri = std::max(tri, ac - ab - bc);
  }
  const auto big = coefficients::Region::ball({0.0, 0.0}, 5.0);
  const double dirac = std::abs(coefficients::bl_distance(atoms({{0.1, 0.2}}, {1.0}), atoms({{-0.2, 0.6}}, {1.0}), big) -
                                std::hypot(0.3, 0.4));
  double excess = 0.0;
  for (double r : {0.5, 1.0, 3.0}) {
    excess = std::max(excess, std::abs(coefficients::bl_distance(atoms({{0.0, 0.0}}, {1.0}), atoms({{0.0, 0.0}}, {2.0}),
                                                                 coefficients::Region::ball({0.0, 0.0}, r)) -
                                       r));
  }
  Outcome o;
  o.passed = sym <= 1e-9 && tri <= 1e-9 && dirac <= 1e-6 && excess <= 1e-6;
  o.detail = "200 cases: max |d(a,b)-d(b,a)| " + fmt("%.1e", sym) + ", max triangle excess " + fmt("%.1e", tri) +
             "; dirac/dirac err " + fmt("%.1e", dirac) + ", mass-excess err " + fmt("%.1e", excess);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "variation engine exactness", variation_exactness},
      {2, "closed-form transform oracle", closed_form_transform},
      {3, "pointwise inequality suite", inequality_suite},
      {4, "discrete martingale structure", martingale_structure},
      {5, "flat-graph annihilation", flat_annihilation},
      {6, "Lepingle desk scale", lepingle},
      {7, "W and S against the coefficient packing", square_function_shape},
      {8, "operator ratio stability", operator_ratio_stability},
      {9, "corner-graph packing", corner_packing},
      {10, "transport LP", transport_lp},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.passed) ++failed;
    std::printf("criterion %2d [PRIMARY] %s  %s | %s | %.1f s\n", c.id, o.passed ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
