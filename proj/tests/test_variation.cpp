#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lipvar/variation.hpp"
#include "oracles.hpp"

using namespace lipvar;
using namespace lipvar::variation;

namespace {

// Spec examples list values by increasing eps; the library stores decreasing eps.
std::vector<double> by_increasing_eps(std::vector<double> v) {
  std::reverse(v.begin(), v.end());
  return v;
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

}  // namespace

TEST(RhoVariation, Examples) {
  const std::vector<double> c(5, 1.5);
  EXPECT_EQ(rho_variation(c, 2.0).value, 0.0);
  EXPECT_NEAR(rho_variation(std::vector<double>{0, 1, 0, 1}, 2.0).value, std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(rho_variation(std::vector<double>{0, 2, 1, 3}, 1.0).value, 5.0, 1e-15);
  EXPECT_NEAR(rho_variation(std::vector<double>{0, 2, 1, 3}, 2.0).value, 3.0, 1e-15);
  EXPECT_NEAR(oracle::variation({0, 1, 0, 1}, 2.0), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(oracle::variation({0, 2, 1, 3}, 2.0), 3.0, 1e-15);
  EXPECT_THROW(rho_variation(c, 0.5), InvalidArgument);
}

TEST(RhoVariation, SubsequenceReproducesValue) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_family(rng, 15);
    for (double rho : {1.0, 2.0, 2.5, 3.0}) {
      const auto r = rho_variation(v, rho);
      double s = 0.0;
      for (std::size_t k = 1; k < r.subsequence.size(); ++k) {
        ASSERT_LT(r.subsequence[k - 1], r.subsequence[k]);
        s += std::pow(std::abs(v[r.subsequence[k]] - v[r.subsequence[k - 1]]), rho);
      }
      EXPECT_NEAR(s, std::pow(r.value, rho), 1e-12 * std::max(1.0, s));
    }
  }
}

TEST(RhoVariation, MatchesOracleAndBruteForce) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 300; ++t) {
    std::uniform_int_distribution<int> len(1, 12);
    const auto v = random_family(rng, static_cast<std::size_t>(len(rng)));
    for (double rho : {1.0, 2.0, 2.5, 3.0}) {
      const double dp = rho_variation(v, rho).value;
      EXPECT_NEAR(dp, oracle::variation(v, rho), 1e-12 * std::max(1.0, dp));
      EXPECT_NEAR(dp, rho_variation_bruteforce(v, rho), 1e-12 * std::max(1.0, dp));
    }
  }
}

TEST(RhoVariation, BruteForceEdgeCases) {
  EXPECT_EQ(rho_variation_bruteforce(std::vector<double>{3.0}, 2.0), 0.0);
  EXPECT_NEAR(rho_variation_bruteforce(std::vector<double>{1.0, -2.5}, 3.0), 3.5, 1e-15);
  EXPECT_THROW(rho_variation_bruteforce(std::vector<double>(21, 0.0), 2.0), InvalidArgument);
}

TEST(RhoVariation, InfinityIsMaxJump) {
  const std::vector<double> v{0.0, 3.0, -1.0, 2.0};
  EXPECT_EQ(rho_variation(v, kInfinity).value, 4.0);
}

TEST(RhoVariation, AntitoneInRho) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_family(rng, 20);
    double prev = kInfinity;
    for (double rho : {1.0, 1.5, 2.0, 2.5, 3.0, 5.0}) {
      const double x = rho_variation(v, rho).value;
      EXPECT_LE(x, prev + 1e-12);
      prev = x;
    }
  }
}

TEST(Oscillation, Examples) {
  const WindowSpec w({1.0, 0.5, 0.25});
  const std::vector<double> eps{0.9, 0.6, 0.4, 0.3};
  EXPECT_NEAR(oscillation(std::vector<double>{0, 1, 0, 2}, eps, w), std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(oracle::oscillation({0, 1, 0, 2}, eps, {1.0, 0.5, 0.25}), std::sqrt(5.0), 1e-15);
  EXPECT_EQ(oscillation(std::vector<double>{2, 2, 2, 2}, eps, w), 0.0);
  const WindowSpec one({1.0, 0.1});
  EXPECT_NEAR(oscillation(std::vector<double>{0.5, -1.0, 3.0, 0.0}, eps, one), 4.0, 1e-15);
}

TEST(Oscillation, MatchesOracleAndBoundedByV2) {
  std::mt19937_64 rng(14);
  std::vector<double> eps;
  for (int k = 0; k < 12; ++k) eps.push_back(std::exp2(-k / 3.0));
  const std::vector<std::vector<double>> specs{
      WindowSpec::dyadic(1.0, eps.back()).boundaries(), WindowSpec::geometric(1.0, 0.3, eps.back()).boundaries(),
      {1.0, 0.7, 0.2, 0.05}};
  for (int t = 0; t < 300; ++t) {
    const auto v = random_family(rng, eps.size());
    for (const auto& b : specs) {
      const double o = oscillation(v, eps, WindowSpec(b));
      EXPECT_NEAR(o, oracle::oscillation(v, eps, b), 1e-12);
      EXPECT_LE(o, rho_variation(v, 2.0).value + 1e-12);
    }
  }
}

TEST(WindowSpecTest, Validation) {
  EXPECT_THROW(WindowSpec({1.0, 1.0}), InvalidArgument);
  const auto d = WindowSpec::dyadic(1.0, 0.1);
  const auto& b = d.boundaries();
  EXPECT_EQ(b.front(), 1.0);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_EQ(b[i], 0.5 * b[i - 1]);
  EXPECT_LE(b.back(), 0.1);
}

TEST(LambdaJumps, Examples) {
  EXPECT_EQ(lambda_jumps(by_increasing_eps({0, 2, 0, 2}), 1.0), 3);
  EXPECT_EQ(lambda_jumps(std::vector<double>(6, 1.0), 0.1), 0);
  EXPECT_EQ(lambda_jumps(by_increasing_eps({0, 0.5, 1}), 0.9), 1);
  EXPECT_EQ(oracle::jumps(by_increasing_eps({0, 2, 0, 2}), 1.0), 3);
  EXPECT_EQ(oracle::jumps(by_increasing_eps({0, 0.5, 1}), 0.9), 1);
  EXPECT_THROW(lambda_jumps(std::vector<double>{0.0}, 0.0), InvalidArgument);
}

TEST(LambdaJumps, SingleAnchorGreedyIsNotEnough) {
  // A single-anchor scan re-anchored at 5 finds only one jump here; the optimum
  // pairs (0, 5) and (5.5, 4).
  const auto v = by_increasing_eps({0, 5, 5.5, 4});
  EXPECT_EQ(oracle::jumps(v, 1.0), 2);
  EXPECT_EQ(lambda_jumps(v, 1.0), 2);
}

TEST(LambdaJumps, MatchesOracle) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 500; ++t) {
    std::uniform_int_distribution<int> len(1, 12);
    const auto v = random_family(rng, static_cast<std::size_t>(len(rng)));
    for (double lambda : {0.25, 0.5, 1.0, 1.5, 3.0}) {
      EXPECT_EQ(lambda_jumps(v, lambda), oracle::jumps(v, lambda));
    }
  }
}

TEST(LambdaJumps, ScaleInvarianceAndJumpVariation) {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_family(rng, 16);
    std::vector<double> s(v);
    for (double& x : s) x *= 2.5;
    for (double lambda : {0.3, 0.7, 1.1}) {
      EXPECT_EQ(lambda_jumps(s, 2.5 * lambda), lambda_jumps(v, lambda));
      for (double rho : {2.0, 2.5, 3.0}) {
        const double n = lambda_jumps(v, lambda);
        EXPECT_LE(lambda * std::pow(n, 1.0 / rho), rho_variation(v, rho).value + 1e-12);
      }
    }
  }
}

TEST(Upcrossings, Examples) {
  EXPECT_EQ(upcrossings(by_increasing_eps({0, 2, 0, 2}), 0.5, 1.5), 2);
  EXPECT_EQ(upcrossings(std::vector<double>(4, 1.0), 0.5, 1.5), 0);
  EXPECT_EQ(upcrossings(by_increasing_eps({0, 2}), 0.5, 1.5), 1);
  EXPECT_EQ(oracle::upcrossings(by_increasing_eps({0, 2, 0, 2}), 0.5, 1.5), 2);
  EXPECT_THROW(upcrossings(std::vector<double>{0.0}, 1.0, 1.0), InvalidArgument);
}

TEST(Upcrossings, MatchesOracleAndBoundedByJumps) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 500; ++t) {
    std::uniform_int_distribution<int> len(1, 12);
    const auto v = random_family(rng, static_cast<std::size_t>(len(rng)));
    for (auto [a, b] : {std::pair{-0.5, 0.5}, std::pair{0.0, 1.0}, std::pair{-1.0, 1.5}}) {
      const int n = upcrossings(v, a, b);
      EXPECT_EQ(n, oracle::upcrossings(v, a, b));
      EXPECT_LE(n, lambda_jumps(v, b - a));
    }
  }
}

TEST(ShortLong, Examples) {
  auto s = split_short_long(std::vector<double>{0.9, 0.8});
  EXPECT_EQ(s.short_indices, std::vector<std::size_t>{0});
  EXPECT_TRUE(s.long_indices.empty());
  s = split_short_long(std::vector<double>{0.9, 0.4});
  EXPECT_EQ(s.long_indices, std::vector<std::size_t>{0});
  s = split_short_long(std::vector<double>{0.9, 0.6, 0.3, 0.26});
  EXPECT_EQ(s.short_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.long_indices, std::vector<std::size_t>{1});
  EXPECT_THROW(split_short_long(std::vector<double>{0.5, 0.6}), InvalidArgument);
  EXPECT_EQ(octave_of(0.5), 0);
  EXPECT_EQ(octave_of(0.75), 0);
  EXPECT_EQ(octave_of(0.25), 1);
  EXPECT_EQ(octave_of(1.0), -1);
}

TEST(ShortVariation, Examples) {
  const std::vector<double> eps{0.9, 0.6, 0.4, 0.3};
  EXPECT_EQ(short_variation(std::vector<double>(4, 3.0), eps), 0.0);
  EXPECT_NEAR(short_variation(std::vector<double>{0, 1, 0, 2}, eps), std::sqrt(5.0), 1e-15);
  const std::vector<double> one{0.9, 0.8, 0.7, 0.6};
  const std::vector<double> v{0, 2, -1, 1};
  EXPECT_NEAR(short_variation(v, one), rho_variation(v, 2.0).value, 1e-15);
}

TEST(ShortVariation, MatchesPerOctaveOracleAndBoundedByV2) {
  std::mt19937_64 rng(18);
  std::vector<double> eps;
  for (int k = 0; k < 12; ++k) eps.push_back(std::exp2(-k / 4.0));
  for (int t = 0; t < 200; ++t) {
    const auto v = random_family(rng, eps.size());
    double total = 0.0;
    for (int j = -1; j < 4; ++j) {
      std::vector<double> part;
      for (std::size_t k = 0; k < eps.size(); ++k) {
        if (eps[k] < std::exp2(-j) && eps[k] >= std::exp2(-j - 1)) part.push_back(v[k]);
      }
      total += oracle::variation_power_sum(part, 2.0);
    }
    const double s = short_variation(v, eps);
    EXPECT_NEAR(s, std::sqrt(total), 1e-12);
    EXPECT_LE(s, rho_variation(v, 2.0).value + 1e-12);
  }
}
