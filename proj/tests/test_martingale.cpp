#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lipvar/martingale.hpp"
#include "oracles.hpp"

using namespace lipvar;
using namespace lipvar::martingale;
using namespace lipvar::geometry;

namespace {

DiscreteMeasure graph_measure(const FamilySpec& spec, double lo, double side, double h) {
  return sample_measure(build_graph(spec), VCube::from_lower({lo}, side), h, unit_density());
}

FamilySpec from_samples_spec() {
  SampleTable table;
  for (int k = 0; k <= 64; ++k) {
    const double x = -2.0 + k / 16.0;
    table.rows.push_back({x, 0.5 * std::sin(2.0 * x)});
  }
  return FamilySpec{.kind = FamilyKind::from_samples, .table = table, .declared_lip = 1.0};
}

std::vector<FamilySpec> builtin_graphs() {
  return {FamilySpec{},
          FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
          FamilySpec{.kind = FamilyKind::corner, .slope = 2.0, .corner_at = 0.1},
          FamilySpec{.kind = FamilyKind::multiscale, .lip = 1.0, .seed = 5},
          from_samples_spec()};
}

std::vector<std::vector<double>> points_of(const DiscreteMeasure& mu) {
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < mu.size(); ++i) pts.emplace_back(mu.point(i).begin(), mu.point(i).end());
  return pts;
}

double direct_oracle(const DiscreteMeasure& mu, const kernels::CZKernel& k, const VCube& cell) {
  return oracle::conditional_average(
      points_of(mu), mu.weights(), [&](const std::vector<double>& p) { return cell.contains(std::span(p).first(1)); },
      [&](const std::vector<double>& v) { return k.eval(v); });
}

}  // namespace

TEST(ConditionalAvg, MatchesDoubleSumOracleOnCorner) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::corner, .slope = 1.0}, -1.0, 2.0, 1.0 / 64);
  const auto k = kernels::cauchy_component(1);
  for (const VCube& cell : {VCube({0.1}, 0.5), VCube({-0.05}, 0.25), VCube({0.3}, 0.75)}) {
    const double expect = direct_oracle(mu, k, cell);
    EXPECT_NEAR(conditional_avg(mu, k, cell), expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(ConditionalAvg, FlatVanishesAndWholeSupportVanishes) {
  const auto flat = graph_measure(FamilySpec{}, -1.0, 2.0, 1.0 / 64);
  const auto saw = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth}, -1.0, 2.0, 1.0 / 64);
  const auto k1 = kernels::cauchy_component(1);
  const auto k2 = kernels::cauchy_component(2);
  EXPECT_NEAR(conditional_avg(flat, k2, VCube({0.2}, 0.5)), 0.0, 1e-12);
  EXPECT_NEAR(conditional_avg(saw, k1, VCube({0.0}, 4.0)), 0.0, 1e-12);
  EXPECT_THROW(conditional_avg(flat, k1, VCube({5.0}, 0.5)), InvalidArgument);
}

TEST(ConditionalAvg, FlatWithTailVanishes) {
  auto flat = graph_measure(FamilySpec{}, -4.0, 8.0, 1.0 / 64);
  flat.set_tail_radius(1.0);
  const auto k1 = kernels::cauchy_component(1);
  for (const VCube& cell : {VCube({0.125}, 0.25), VCube({-0.5}, 0.5)}) {
    EXPECT_NEAR(conditional_avg(flat, k1, cell), 0.0, 1e-12);
  }
}

TEST(MartingaleTerm, EngineIdentityMatchesDirectSum) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -1.0, 2.0, 1.0 / 64);
  const auto k = kernels::cauchy_component(2);
  const MartingaleEngine engine(mu, k);
  const std::vector<double> a{0.03};
  for (int m = 0; m <= 3; ++m) {
    for (double x0 : {-0.7, 0.0, 0.41}) {
      const std::vector<double> x{x0, 0.0};
      const double direct = martingale_term(mu, k, a, m, x);
      EXPECT_NEAR(engine.term(a, m, x), direct, 1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(MartingaleTerm, TowerPropertyOnAllBuiltinGraphs) {
  const auto k = kernels::cauchy_component(1);
  for (const auto& spec : builtin_graphs()) {
    const auto mu = graph_measure(spec, -1.0, 2.0, 1.0 / 64);
    const VCube root = VCube::from_lower({-0.75}, 1.0);
    for (int m = 0; m < 3; ++m) {
      for (const auto& parent : dyadic_cubes(root, m, m)) {
        const double mp = mass(mu, parent);
        double children = 0.0;
        for (const auto& c : dyadic_cubes(parent, 1, 1)) children += mass(mu, c) * conditional_avg(mu, k, c);
        const double whole = mp * conditional_avg(mu, k, parent);
        EXPECT_NEAR(children, whole, 1e-12 * std::max(1.0, std::abs(whole))) << detail::kind_name(spec.kind) << " m=" << m;
      }
    }
  }
}

TEST(MartingaleTerm, ZeroMassCellRejected) {
  const auto mu = graph_measure(FamilySpec{}, 0.0, 1.0, 1.0 / 64);
  const MartingaleEngine engine(mu, kernels::cauchy_component(1));
  const std::vector<double> a{0.0};
  const std::vector<double> x{3.2, 0.0};
  EXPECT_THROW(engine.term(a, 2, x), InvalidArgument);
}

TEST(AveragedTerm, SingleOffsetIsTheLatticeTerm) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth}, -1.0, 2.0, 1.0 / 64);
  const auto k = kernels::cauchy_component(1);
  MartingaleConfig cfg;
  cfg.grid_points = 1;
  const std::vector<double> x{0.3, 0.0};
  for (int m = 0; m <= 3; ++m) {
    const std::vector<double> a{std::ldexp(0.5, -m)};
    EXPECT_NEAR(averaged_term(mu, k, m, x, cfg).value, martingale_term(mu, k, a, m, x), 1e-12);
  }
}

TEST(AveragedTerm, QuadratureConvergesInG) {
  // a -> E_m^a mu(x) jumps whenever a cell boundary crosses x, so convergence is measured
  // on the L2(mu) norm of E_m over P rather than pointwise.
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -2.0, 4.0, 1.0 / 128);
  const MartingaleEngine engine(mu, kernels::cauchy_component(1));
  const VCube p({0.0}, 1.0);
  for (int m = 0; m <= 4; ++m) {
    double s4 = 0.0;
    double s8 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!p.contains(mu.base(i))) continue;
      const double g4 = engine.averaged(m, mu.point(i), 4).value;
      const double g8 = engine.averaged(m, mu.point(i), 8).value;
      s4 += g4 * g4 * mu.weight(i);
      s8 += g8 * g8 * mu.weight(i);
    }
    EXPECT_LT(std::abs(std::sqrt(s4) - std::sqrt(s8)), 0.1 * std::sqrt(s8)) << "m=" << m;
  }
}

TEST(AveragedTerm, FlatVanishes) {
  auto flat = graph_measure(FamilySpec{}, -4.0, 8.0, 1.0 / 64);
  flat.set_tail_radius(1.5);
  MartingaleConfig cfg;
  for (int m = 0; m <= 4; ++m) {
    EXPECT_NEAR(averaged_term(flat, kernels::cauchy_component(1), m, std::vector<double>{0.2, 0.0}, cfg).value, 0.0,
                1e-12);
  }
}

TEST(AveragedTerm, ConfigValidation) {
  MartingaleConfig cfg;
  cfg.m_max = 6;
  EXPECT_THROW(cfg.validate(1.0 / 64), InvalidArgument);
  cfg.m_max = 4;
  EXPECT_NO_THROW(cfg.validate(1.0 / 64));
  cfg.grid_points = 0;
  EXPECT_THROW(cfg.validate(1.0 / 64), InvalidArgument);
}

TEST(Lambda, SeparatedPointsGiveZero) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth}, -2.0, 4.0, 1.0 / 64);
  const DiscreteMeasure* ms[] = {&mu};
  for (int m = 0; m <= 3; ++m) {
    const double gap = std::ldexp(1.0, -m) * 1.01;
    const std::vector<std::vector<double>> xs{{0.1, 0.0}, {0.1 + gap, 0.0}};
    EXPECT_EQ(lambda_weight(ms, m, xs, {}, 8), 0.0);
  }
}

TEST(Lambda, FlatSingleMeasureIsTwoToTheM) {
  const auto flat = graph_measure(FamilySpec{}, -4.0, 8.0, 1.0 / 64);
  const DiscreteMeasure* ms[] = {&flat};
  for (int m = 0; m <= 3; ++m) {
    const std::vector<std::vector<double>> xs{{0.3, 0.0}, {0.3, 0.0}};
    const std::vector<std::vector<double>> ys{{3.5, 0.0}};
    // Exact integral: 2^{2m} * 2^-m over a region of measure 2^-m, every cell of mass 2^-m.
    EXPECT_NEAR(lambda_weight(ms, m, xs, ys, 4), std::ldexp(1.0, m), 1e-12 * std::ldexp(1.0, m));
  }
}

TEST(Lambda, ClaimBoundOnRandomInputs) {
  // Arc-length measure gives mu(D) >= |D~|, so Lambda_m(x, z; y) <= 2^m.
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -2.0, 4.0, 1.0 / 64);
  const DiscreteMeasure* ms[] = {&mu};
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = t % 4;
    const std::vector<std::vector<double>> xs{{u(rng), 0.0}, {u(rng), 0.0}};
    const std::vector<std::vector<double>> ys{{u(rng), 0.0}};
    worst = std::max(worst, lambda_weight(ms, m, xs, ys, 4) / std::ldexp(1.0, m));
  }
  EXPECT_LE(worst, 1.0 + 1e-12);
  EXPECT_GT(worst, 0.0);
}

TEST(Lambda, FormEqualsAveragedTerm) {
  const auto k = kernels::cauchy_component(1);
  for (const auto& spec : {FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0},
                           FamilySpec{.kind = FamilyKind::corner, .slope = 2.0}}) {
    const auto mu = graph_measure(spec, -1.0, 2.0, 1.0 / 64);
    MartingaleConfig cfg;
    for (int m = 1; m <= 3; ++m) {
      for (double x0 : {-0.21, 0.37}) {
        const std::vector<double> x{x0, 0.0};
        const double avg = averaged_term(mu, k, m, x, cfg).value;
        const double lam = lambda_form(mu, k, m, x, cfg.grid_points);
        EXPECT_NEAR(lam, avg, 1e-9 * std::max(1.0, std::abs(avg))) << detail::kind_name(spec.kind) << " m=" << m;
      }
    }
  }
}

TEST(Diagnostics, FlatWAndSVanish) {
  auto flat = graph_measure(FamilySpec{}, -4.0, 8.0, 1.0 / 64);
  flat.set_tail_radius(1.5);
  const auto k = kernels::cauchy_component(1);
  MartingaleConfig cfg;
  const std::vector<double> x{25.0 / 128, 0.0};  // a sample point, so the neighbourhood is symmetric
  EXPECT_NEAR(w_diagnostic(flat, k, x, cfg), 0.0, 1e-10);
  const auto grid = transforms::EpsGrid::log_uniform(1.0, 1.0 / 16, 4);
  EXPECT_NEAR(s_diagnostic(flat, k, x, grid), 0.0, 1e-10);
}

TEST(Diagnostics, WProfileIsCumulative) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -2.0, 4.0, 1.0 / 128);
  const MartingaleEngine engine(mu, kernels::cauchy_component(1));
  MartingaleConfig cfg;
  const std::vector<double> x{0.13, 0.0};
  const auto prof = w_diagnostic(engine, x, cfg);
  ASSERT_EQ(prof.entries.size(), 5u);
  double acc = 0.0;
  for (const auto& e : prof.entries) {
    acc += (e.smooth - e.em) * (e.smooth - e.em);
    EXPECT_NEAR(e.partial, std::sqrt(acc), 1e-14);
  }
  EXPECT_NEAR(prof.value, prof.entries.back().partial, 0.0);
  EXPECT_GT(prof.value, 0.0);
}

TEST(Diagnostics, SBoundedByV2) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::corner, .slope = 2.0}, -2.0, 4.0, 1.0 / 128);
  const auto k = kernels::cauchy_component(2);
  const auto grid = transforms::EpsGrid::log_uniform(1.0, 1.0 / 32, 4);
  const std::vector<double> ones(mu.size(), 1.0);
  for (double x0 : {-0.5, -0.01, 0.2, 0.77}) {
    const std::vector<double> x{x0, 2.0 * std::abs(x0)};
    const auto fam = transforms::sample_family(k, mu, ones, x, grid, transforms::Mode::smooth);
    EXPECT_LE(s_diagnostic(mu, k, x, grid), variation::rho_variation(fam, 2.0).value + 1e-12);
  }
}

TEST(Lepingle, RatioFiniteAndLatticeOptional) {
  const auto mu = graph_measure(FamilySpec{.kind = FamilyKind::sawtooth, .slope = 1.0}, -2.0, 4.0, 1.0 / 64);
  const MartingaleEngine engine(mu, kernels::cauchy_component(1));
  MartingaleConfig cfg;
  const VCube p({0.0}, 1.0);
  const auto avg = lepingle_ratio(engine, p, cfg, 3.0);
  const auto lat = lepingle_ratio(engine, p, cfg, 3.0, std::vector<double>{0.0});
  EXPECT_TRUE(std::isfinite(avg.ratio));
  EXPECT_GT(avg.ratio, 0.0);
  EXPECT_TRUE(std::isfinite(lat.ratio));
  EXPECT_EQ(avg.points, 192u);
  EXPECT_NEAR(avg.mass_p, mass(mu, p), 0.0);
}
