#pragma once

// Invariant suites behind `lipvar verify`. Each check records module, operation, seed,
// measured value and tolerance. A fault hook corrupts the kernels under test so that the
// suite itself can be mutation-tested.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lipvar/coefficients.hpp"
#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/harness.hpp"
#include "lipvar/io.hpp"
#include "lipvar/kernels.hpp"
#include "lipvar/martingale.hpp"
#include "lipvar/transforms.hpp"
#include "lipvar/variation.hpp"

namespace lipvar::verify {

enum class Fault { none, kernel_oddness };

inline Fault parse_fault(const std::string& s) {
  if (s.empty() || s == "none") return Fault::none;
  if (s == "kernel-oddness" || s == "kernel_oddness") return Fault::kernel_oddness;
  throw InvalidArgument("unknown fault '" + s + "'");
}

struct Check {
  std::string module;
  std::string op;
  std::string invariant;
  std::uint64_t seed = 0;
  double value = 0.0;      // measured discrepancy or statistic
  double tolerance = 0.0;  // passes when value <= tolerance
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Report {
  std::vector<Check> checks;
  bool ok() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
  std::vector<Check> failures() const {
    std::vector<Check> out;
    for (const auto& c : checks) {
      if (!c.passed) out.push_back(c);
    }
    return out;
  }
};

struct Options {
  bool full = false;
  std::uint64_t seed = 1;
  int jobs = 0;
  Fault fault = Fault::none;
};

inline void write_summary_csv(std::ostream& out, const Report& rep) {
  out << "module,op,invariant,seed,value,tolerance,passed,seconds,detail\n";
  for (const auto& c : rep.checks) {
    out << io::field(c.module) << "," << io::field(c.op) << "," << io::field(c.invariant) << "," << c.seed << ","
        << io::fmt(c.value) << "," << io::fmt(c.tolerance) << "," << (c.passed ? 1 : 0) << "," << io::fmt(c.seconds)
        << "," << io::field(c.detail) << "\n";
  }
}

namespace detail {

/// Kernels exercised by the suite; the oddness fault flips the sign on the half space x_1 < 0.
inline std::vector<kernels::CZKernel> kernels_under_test(Fault fault) {
  std::vector<kernels::CZKernel> ks{kernels::cauchy_component(1), kernels::cauchy_component(2),
                                    kernels::riesz_component(1, 1, 2), kernels::riesz_component(3, 2, 3)};
  if (fault == Fault::kernel_oddness) {
    for (auto& k : ks) {
      auto inner = k.eval;
      k.eval = [inner](std::span<const double> x) { return x[0] < 0.0 ? -inner(x) : inner(x); };
    }
  }
  return ks;
}

inline kernels::CZKernel cauchy_under_test(Fault fault) { return kernels_under_test(fault).front(); }

/// Longest chain s_1 < t_1 <= s_2 < t_2 <= ... of index pairs satisfying ok(s, t), by recursion.
inline int pair_chain(std::size_t n, const std::function<bool(std::size_t, std::size_t)>& ok) {
  std::vector<int> best(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    int b = best[i + 1];
    for (std::size_t t = i + 1; t < n; ++t) {
      if (ok(i, t)) b = std::max(b, 1 + best[t]);
    }
    best[i] = b;
  }
  return n == 0 ? 0 : best[0];
}

inline std::vector<double> random_family(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(len(rng));
  for (double& x : v) x = u(rng);
  return v;
}

class Runner {
 public:
  explicit Runner(Report& rep) : rep_(rep) {}

  /// Runs body, which fills value/tolerance (and optionally detail); exceptions fail the check.
  void run(const std::string& module, const std::string& op, const std::string& invariant, std::uint64_t seed,
           const std::function<void(Check&)>& body) {
    Check c{module, op, invariant, seed};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(c);
      c.passed = std::isfinite(c.value) && c.value <= c.tolerance;
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep_.checks.push_back(std::move(c));
  }

 private:
  Report& rep_;
};

inline geometry::DiscreteMeasure graph_measure(const geometry::FamilySpec& spec, double lo, double side, double h) {
  return geometry::sample_measure(geometry::build_graph(spec), geometry::VCube::from_lower({lo}, side), h,
                                  geometry::unit_density());
}

}  // namespace detail

inline Report run(const Options& opt) {
  using namespace geometry;
  Report rep;
  detail::Runner r(rep);
  const int scale = opt.full ? 5 : 1;
  const std::uint64_t seed = opt.seed;

  // ---- kernels
  for (const auto& k : detail::kernels_under_test(opt.fault)) {
    r.run("kernels", "verify_cz_bounds", "oddness " + k.name, seed, [&](Check& c) {
      const auto rep_k = kernels::verify_cz_bounds(k, 200 * scale, seed);
      c.value = rep_k.oddness_defect;
      c.tolerance = 1e-12;
    });
    r.run("kernels", "verify_cz_bounds", "size/gradient/hessian " + k.name, seed, [&](Check& c) {
      const auto rep_k = kernels::verify_cz_bounds(k, 200 * scale, seed);
      c.value = std::max({rep_k.size_ratio, rep_k.gradient_ratio, rep_k.hessian_ratio}) / k.bound_C;
      c.tolerance = 1.0 + 1e-3;
    });
  }
  r.run("kernels", "TruncationProfile", "monotone 0..1 profile", 0, [&](Check& c) {
    const kernels::TruncationProfile prof(1);
    double prev = 0.0;
    double worst = std::abs(prof(prof.lo()));
    for (int i = 0; i <= 1000; ++i) {
      const double v = prof(4.0 * i / 1000.0);
      worst = std::max(worst, prev - v);
      prev = v;
    }
    worst = std::max(worst, std::abs(prof(prof.hi()) - 1.0));
    c.value = worst;
    c.tolerance = 0.0;
  });

  // ---- geometry
  r.run("geometry", "sample_measure", "sawtooth arclength sqrt(2)", 0, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, 0.0, 1.0, 1.0 / 256);
    c.value = std::abs(mu.total_mass() - std::sqrt(2.0));
    c.tolerance = 1e-6;
  });
  r.run("geometry", "dyadic_cubes", "children partition parent mass", seed, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::multiscale, .lip = 1.0, .seed = seed}, -1.0,
                                          2.0, 1.0 / 128);
    double worst = 0.0;
    for (const auto& q : dyadic_cubes(VCube::from_lower({-1.0}, 2.0), 0, 3)) {
      double s = 0.0;
      for (const auto& ch : dyadic_cubes(q, 1, 1)) s += mass(mu, ch);
      worst = std::max(worst, std::abs(s - mass(mu, q)) / std::max(1.0, mass(mu, q)));
    }
    c.value = worst;
    c.tolerance = 1e-13;
  });
  r.run("geometry", "estimate_lip", "sawtooth lip = 1", 0, [&](Check& c) {
    const auto g = build_graph(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0});
    c.value = std::abs(estimate_lip(g, VCube::from_lower({0.0}, 1.0), 64) - 1.0);
    c.tolerance = 1e-9;
  });

  // ---- transforms
  r.run("transforms", "truncated_sharp", "flat segment log form at x=2", 0, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{}, -1.0, 6.0, std::ldexp(1.0, -10));
    std::vector<double> f(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) f[i] = (mu.base(i)[0] >= 0.0 && mu.base(i)[0] < 1.0) ? 1.0 : 0.0;
    const auto k = detail::cauchy_under_test(opt.fault);
    const std::vector<double> x{2.0, 0.0};
    const double expect = std::log(2.0);
    c.value = std::max(std::abs(transforms::truncated_sharp(k, mu, f, x, 0.25) - expect),
                       std::abs(transforms::truncated_smooth(k, mu, f, x, 0.25) - expect));
    c.tolerance = 2e-3;
  });
  r.run("transforms", "sample_family", "linearity in f", seed, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -1.0, 3.0, 1.0 / 128);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(mu.size()), g(mu.size()), fg(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      f[i] = u(rng);
      g[i] = u(rng);
      fg[i] = 2.0 * f[i] - 3.0 * g[i];
    }
    const auto grid = transforms::EpsGrid::log_uniform(0.5, 1.0 / 16, 4);
    const auto k = detail::cauchy_under_test(opt.fault);
    const auto x = mu.point(mu.size() / 2);
    const auto a = transforms::sample_family(k, mu, f, x, grid, transforms::Mode::smooth);
    const auto b = transforms::sample_family(k, mu, g, x, grid, transforms::Mode::smooth);
    const auto ab = transforms::sample_family(k, mu, fg, x, grid, transforms::Mode::smooth);
    double worst = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
      worst = std::max(worst, std::abs(ab.values[e] - 2.0 * a.values[e] + 3.0 * b.values[e]));
    }
    c.value = worst;
    c.tolerance = 1e-10;
  });

  // ---- variation
  {
    const int families = 200 * scale;
    r.run("variation", "rho_variation", "DP = exhaustive enumeration", seed, [&](Check& c) {
      std::mt19937_64 rng(seed);
      double worst = 0.0;
      for (int t = 0; t < families; ++t) {
        const auto v = detail::random_family(rng, 12);
        for (double rho : {1.0, 2.0, 2.5, 3.0}) {
          worst = std::max(worst, std::abs(variation::rho_variation(v, rho).value -
                                           variation::rho_variation_bruteforce(v, rho)));
        }
      }
      c.value = worst;
      c.tolerance = 1e-12;
    });
    r.run("variation", "lambda_jumps", "greedy = longest pair chain", seed, [&](Check& c) {
      std::mt19937_64 rng(seed + 1);
      double bad = 0.0;
      for (int t = 0; t < families; ++t) {
        const auto v = detail::random_family(rng, 12);
        for (double lambda : {0.1, 0.5, 1.0}) {
          const int brute = detail::pair_chain(v.size(), [&](std::size_t s, std::size_t u) {
            return std::abs(v[s] - v[u]) > lambda;
          });
          if (brute != variation::lambda_jumps(v, lambda)) bad += 1.0;
        }
      }
      c.value = bad;
      c.tolerance = 0.0;
    });
    r.run("variation", "upcrossings", "greedy = longest pair chain", seed, [&](Check& c) {
      std::mt19937_64 rng(seed + 2);
      double bad = 0.0;
      for (int t = 0; t < families; ++t) {
        const auto v = detail::random_family(rng, 12);
        const std::vector<double> inc(v.rbegin(), v.rend());  // increasing eps
        const int brute = detail::pair_chain(inc.size(), [&](std::size_t s, std::size_t u) {
          return inc[s] < -0.2 && inc[u] > 0.3;
        });
        if (brute != variation::upcrossings(v, -0.2, 0.3)) bad += 1.0;
      }
      c.value = bad;
      c.tolerance = 0.0;
    });
    r.run("variation", "oscillation", "window sum = pair enumeration", seed, [&](Check& c) {
      std::mt19937_64 rng(seed + 3);
      double worst = 0.0;
      for (int t = 0; t < families; ++t) {
        const auto v = detail::random_family(rng, 12);
        std::vector<double> eps(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) eps[i] = std::exp2(-0.5 * static_cast<double>(i));
        const auto w = variation::WindowSpec::dyadic(eps.front(), eps.back());
        const auto& b = w.boundaries();
        double total = 0.0;
        for (std::size_t m = 0; m + 1 < b.size(); ++m) {
          double d = 0.0;
          for (std::size_t i = 0; i < v.size(); ++i) {
            for (std::size_t j = 0; j < v.size(); ++j) {
              if (eps[i] >= b[m + 1] && eps[i] <= b[m] && eps[j] >= b[m + 1] && eps[j] <= b[m]) {
                d = std::max(d, std::abs(v[i] - v[j]));
              }
            }
          }
          total += d * d;
        }
        worst = std::max(worst, std::abs(variation::oscillation(v, eps, w) - std::sqrt(total)));
      }
      c.value = worst;
      c.tolerance = 1e-12;
    });
  }

  // ---- transport
  r.run("transport", "bl_distance", "symmetry and triangle inequality", seed, [&](Check& c) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::uniform_int_distribution<int> count(2, 30);
    auto cloud = [&](const std::vector<double>& pts, std::size_t n) {
      std::vector<double> ws(n);
      for (double& x : ws) x = w(rng);
      return DiscreteMeasure(1, 2, pts, ws, std::vector<double>(n, 1.0), 0.0);
    };
    double worst = 0.0;
    const auto f = coefficients::Region::ball({0.0, 0.0}, 1.5);
    for (int t = 0; t < 40 * scale; ++t) {
      const auto n = static_cast<std::size_t>(count(rng));
      std::vector<double> pts(2 * n);
      for (double& x : pts) x = coord(rng);
      const auto a = cloud(pts, n);
      const auto b = cloud(pts, n);
      const auto d = cloud(pts, n);
      const double ab = coefficients::bl_distance(a, b, f);
      worst = std::max(worst, std::abs(ab - coefficients::bl_distance(b, a, f)));
      worst = std::max(worst, coefficients::bl_distance(a, d, f) - ab - coefficients::bl_distance(b, d, f));
    }
    c.value = worst;
    c.tolerance = 1e-9;
  });
  r.run("transport", "bl_distance", "Dirac and mass-excess closed forms", 0, [&](Check& c) {
    const DiscreteMeasure a(1, 2, {0.1, 0.2}, {1.0}, {1.0}, 0.0);
    const DiscreteMeasure b(1, 2, {-0.2, 0.6}, {1.0}, {1.0}, 0.0);
    const DiscreteMeasure two(1, 2, {0.1, 0.2}, {2.0}, {1.0}, 0.0);
    const auto f = coefficients::Region::ball({0.0, 0.0}, 5.0);
    const double e1 = std::abs(coefficients::bl_distance(a, b, f) - 0.5);
    const double e2 = std::abs(coefficients::bl_distance(a, two, f) - (5.0 - std::hypot(0.1, 0.2)));
    c.value = std::max(e1, e2);
    c.tolerance = 1e-9;
  });

  // ---- coefficients
  r.run("coefficients", "beta", "collinear points give 0", 0, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{}, -4.0, 8.0, 1.0 / 32);
    c.value = coefficients::beta(mu, VCube({0.3}, 1.0), 2.0, 3.0).beta;
    c.tolerance = 1e-12;
  });
  r.run("coefficients", "alpha", "flat graph within resolution tolerance", 0, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{}, -24.0, 48.0, 1.0 / 32);
    coefficients::AlphaOptions ao;
    ao.lip_hint = 0.0;
    const auto a = coefficients::alpha(mu, VCube({0.1}, 1.0), ao);
    c.value = a.alpha / a.tol;
    c.tolerance = 1.0;
  });
  if (opt.full) {
    r.run("coefficients", "alpha", "dilation invariance on the corner graph", 0, [&](Check& c) {
      const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::corner, .slope = 1.0}, -8.0, 16.0, 1.0 / 8);
      coefficients::AlphaOptions ao;
      ao.window_const = 4.0;
      ao.resolution_divisor = 4;
      ao.max_plane_evaluations = 10;
      const double a1 = coefficients::alpha(mu, VCube({0.0}, 1.0), ao).alpha;
      const double a2 = coefficients::alpha(mu.scaled(2.0, 2.0), VCube({0.0}, 2.0), ao).alpha;
      c.value = std::abs(a1 - a2) / std::max(1.0, a1);
      c.tolerance = 1e-6;
    });
  }

  // ---- martingale
  r.run("martingale", "conditional_avg", "tower property over 3 generations", 0, [&](Check& c) {
    const auto k = detail::cauchy_under_test(opt.fault);
    double worst = 0.0;
    for (const auto& spec : {FamilySpec{}, FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
                             FamilySpec{.kind = FamilyKind::corner, .slope = 2.0, .corner_at = 0.1},
                             FamilySpec{.kind = FamilyKind::multiscale, .lip = 1.0, .seed = seed}}) {
      const auto mu = detail::graph_measure(spec, -1.0, 2.0, 1.0 / 64);
      for (const auto& q : dyadic_cubes(VCube::from_lower({-0.75}, 1.0), 0, 2)) {
        double kids = 0.0;
        for (const auto& ch : dyadic_cubes(q, 1, 1)) kids += mass(mu, ch) * martingale::conditional_avg(mu, k, ch);
        const double whole = mass(mu, q) * martingale::conditional_avg(mu, k, q);
        worst = std::max(worst, std::abs(kids - whole) / std::max(1.0, std::abs(whole)));
      }
    }
    c.value = worst;
    c.tolerance = 1e-12;
  });
  r.run("martingale", "lambda_weight", "Lambda form = averaged term", 0, [&](Check& c) {
    const auto k = detail::cauchy_under_test(opt.fault);
    const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -1.0, 2.0, 1.0 / 32);
    const martingale::MartingaleEngine engine(mu, k, opt.jobs);
    double worst = 0.0;
    for (int m = 1; m <= 2; ++m) {
      const std::vector<double> x{0.37, 0.0};
      const double avg = engine.averaged(m, x, 4).value;
      worst = std::max(worst, std::abs(martingale::lambda_form(mu, k, m, x, 4) - avg) / std::max(1.0, std::abs(avg)));
    }
    c.value = worst;
    c.tolerance = 1e-9;
  });

  // ---- harness
  r.run("harness", "test_functions", "atom mean zero and normalized", 0, [&](Check& c) {
    const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::corner, .slope = 2.0, .corner_at = 0.37}, -1.0,
                                          3.0, 1.0 / 100);
    const VCube d({0.31}, 0.23);
    const auto f = harness::test_function(mu, harness::TestKind::h1_atom, d, 0);
    double mean = 0.0;
    double sup = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      mean += mu.weight(i) * f[i];
      sup = std::max(sup, std::abs(f[i]));
    }
    c.value = std::max(std::abs(mean) * 1e3, sup * mass(mu, d) - 1.0);  // mean scaled to the 1e-15 target
    c.tolerance = 1e-12;
  });
  r.run("harness", "operator_ratio", "sublinearity, positivity, domination", seed, [&](Check& c) {
    harness::ExperimentConfig cfg;
    cfg.graph = FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0};
    cfg.eps = harness::EpsGridSpec{0.5, 1.0 / 32, 4};
    cfg.eval_points = 16;
    cfg.seed = seed;
    const auto mu = harness::build_measure(cfg, 1.0 / 128);
    double worst = -1.0;
    for (const auto& res : harness::check_sublinearity(cfg, mu, 2 * scale, opt.jobs)) {
      worst = std::max(worst, res.max_violation);
    }
    c.value = worst;
    c.tolerance = 1e-9;
  });
  if (opt.full) {
    r.run("harness", "refinement_sweep", "flat graph ratio stability < 1.2", seed, [&](Check& c) {
      harness::ExperimentConfig cfg;
      cfg.eps = harness::EpsGridSpec{0.5, 1.0 / 32, 8};
      cfg.resolutions = {1.0 / 128, 1.0 / 256, 1.0 / 512};
      cfg.seed = seed;
      const harness::TestKind kinds[] = {harness::TestKind::indicator, harness::TestKind::h1_atom};
      const auto res = harness::refinement_sweep(cfg, kinds, opt.jobs);
      c.value = *std::max_element(res.stability.begin(), res.stability.end());
      c.tolerance = 1.2;
    });
    r.run("martingale", "lepingle_ratio", "stable within factor 2 under h-halving", 0, [&](Check& c) {
      double prev = 0.0;
      double worst = 1.0;
      for (double h : {1.0 / 128, 1.0 / 256}) {
        const auto mu = detail::graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -2.0, 4.0, h);
        const martingale::MartingaleEngine engine(mu, detail::cauchy_under_test(opt.fault), opt.jobs);
        martingale::MartingaleConfig mc;
        const double v = martingale::lepingle_ratio(engine, VCube({0.0}, 1.0), mc, 3.0, std::nullopt, opt.jobs).ratio;
        if (prev > 0.0) worst = std::max(prev / v, v / prev);
        prev = v;
      }
      c.value = worst;
      c.tolerance = 2.0;
    });
  }
  return rep;
}

}  // namespace lipvar::verify
