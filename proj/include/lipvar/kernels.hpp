#pragma once

// Odd Calderon-Zygmund kernels and the smooth truncation profile.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lipvar/core.hpp"

namespace lipvar::kernels {

using KernelFn = std::function<double(std::span<const double>)>;

/// Scalar odd kernel K on R^d \ {0} with |K| <= C/|x|^n, |dK| <= C/|x|^{n+1}, |d^2 K| <= C/|x|^{n+2}.
struct CZKernel {
  int n = 1;
  int d = 2;
  KernelFn eval;
  double bound_C = 1.0;
  std::string name;

  double operator()(std::span<const double> x) const { return eval(x); }
};

/// Components of the Cauchy kernel (x^1, -x^2)/|x|^2, i in {1, 2}.
/// The second derivatives reach 2/|x|^3 (e.g. d^2/dx1^2 of x1/|x|^2 on the x1 axis),
/// so the smallest constant valid for all three bounds is 2.
inline CZKernel cauchy_component(int i) {
  require(i == 1 || i == 2, "cauchy_component: i must be 1 or 2");
  CZKernel k;
  k.n = 1;
  k.d = 2;
  k.bound_C = 2.0;
  k.name = "cauchy" + std::to_string(i);
  if (i == 1) {
    k.eval = [](std::span<const double> x) { return x[0] / (x[0] * x[0] + x[1] * x[1]); };
  } else {
    k.eval = [](std::span<const double> x) { return -x[1] / (x[0] * x[0] + x[1] * x[1]); };
  }
  return k;
}

/// x^i / |x|^{n+1}. (n+1)(n+3) dominates the size, gradient and Hessian ratios.
inline CZKernel riesz_component(int i, int n, int d) {
  require(n > 0 && n < d, "riesz_component: need 0 < n < d");
  require(i >= 1 && i <= d, "riesz_component: component index out of range");
  CZKernel k;
  k.n = n;
  k.d = d;
  k.bound_C = static_cast<double>((n + 1) * (n + 3));
  k.name = "riesz" + std::to_string(i);
  const int idx = i - 1;
  const double power = 0.5 * (n + 1);
  k.eval = [idx, power](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return x[idx] / std::pow(r2, power);
  };
  return k;
}

struct CZReport {
  double size_ratio = 0.0;      // max |K| |x|^n
  double gradient_ratio = 0.0;  // max |d_i K| |x|^{n+1}
  double hessian_ratio = 0.0;   // max |d_i d_j K| |x|^{n+2}
  double oddness_defect = 0.0;  // max |K(x) + K(-x)| |x|^n
  bool violation = false;       // some ratio exceeds bound_C (1 + 1e-3)
  bool odd = true;              // oddness defect within rounding
};

/// Samples random points (random direction, log-uniform radius in [1e-2, 1e2]) and
/// measures the three bounds with central differences of step 1e-5 |x|.
inline CZReport verify_cz_bounds(const CZKernel& kernel, int samples, std::uint64_t seed) {
  require(samples > 0, "verify_cz_bounds: samples must be positive");
  const int d = kernel.d;
  const double n = kernel.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> logr(std::log(1e-2), std::log(1e2));
  CZReport rep;
  std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d)), z(static_cast<std::size_t>(d));
  auto at = [&](std::vector<double>& p) {
    const double v = kernel.eval(p);
    if (!std::isfinite(v)) throw ComputationError("verify_cz_bounds: kernel value is not finite");
    return v;
  };
  for (int s = 0; s < samples; ++s) {
    double nrm = 0.0;
    for (double& v : x) {
      v = gauss(rng);
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    const double r = std::exp(logr(rng));
    for (double& v : x) v *= r / nrm;
    const double k0 = at(x);
    rep.size_ratio = std::max(rep.size_ratio, std::abs(k0) * std::pow(r, n));
    for (int i = 0; i < d; ++i) y[i] = -x[i];
    const double kneg = at(y);
    rep.oddness_defect = std::max(rep.oddness_defect, std::abs(k0 + kneg) * std::pow(r, n));
    const double step = 1e-5 * r;
    for (int i = 0; i < d; ++i) {
      y = x;
      z = x;
      y[i] += step;
      z[i] -= step;
      const double kp = at(y);
      const double km = at(z);
      rep.gradient_ratio = std::max(rep.gradient_ratio, std::abs((kp - km) / (2.0 * step)) * std::pow(r, n + 1.0));
      rep.hessian_ratio =
          std::max(rep.hessian_ratio, std::abs((kp - 2.0 * k0 + km) / (step * step)) * std::pow(r, n + 2.0));
      for (int j = i + 1; j < d; ++j) {
        double corners[4];
        int c = 0;
        for (double si : {1.0, -1.0}) {
          for (double sj : {1.0, -1.0}) {
            y = x;
            y[i] += si * step;
            y[j] += sj * step;
            corners[c++] = at(y);
          }
        }
        const double mixed = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * step * step);
        rep.hessian_ratio = std::max(rep.hessian_ratio, std::abs(mixed) * std::pow(r, n + 2.0));
      }
    }
  }
  const double limit = kernel.bound_C * (1.0 + 1e-3);
  rep.violation = rep.size_ratio > limit || rep.gradient_ratio > limit || rep.hessian_ratio > limit;
  rep.odd = rep.oddness_defect <= 1e-12;
  return rep;
}

/// The C^2 profile phi_R: 0 on [0, lo], 1 on [hi, inf), quintic smoothstep in between,
/// with lo = 2.1 sqrt(n) and hi = 3 sqrt(n).
class TruncationProfile {
 public:
  explicit TruncationProfile(int n = 1)
      : lo_(2.1 * std::sqrt(static_cast<double>(n))), hi_(3.0 * std::sqrt(static_cast<double>(n))) {
    require(n >= 1, "TruncationProfile: n must be >= 1");
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double operator()(double t) const {
    if (t <= lo_) return 0.0;
    if (t >= hi_) return 1.0;
    const double s = (t - lo_) / (hi_ - lo_);
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
  }

 private:
  double lo_;
  double hi_;
};

inline double base_norm(std::span<const double> x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

/// phi_eps(x) = phi_R(|x~| / eps).
inline double phi(const TruncationProfile& prof, int n, double eps, std::span<const double> x) {
  return prof(base_norm(x, n) / eps);
}

/// phi_eps^delta = phi_eps - phi_delta, eps <= delta.
inline double phi_window(const TruncationProfile& prof, int n, double eps, double delta,
                         std::span<const double> x) {
  require(eps <= delta, "phi_window: need eps <= delta");
  const double r = base_norm(x, n);
  return prof(r / eps) - prof(r / delta);
}

/// gamma_eps = 1 - phi_eps.
inline double gamma(const TruncationProfile& prof, int n, double eps, std::span<const double> x) {
  return 1.0 - phi(prof, n, eps, x);
}

}  // namespace lipvar::kernels
