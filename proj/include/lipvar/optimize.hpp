#pragma once

// Thin wrapper over GSL's Nelder-Mead simplex.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "lipvar/core.hpp"

namespace lipvar::optimize {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

struct Trampoline {
  const Objective* f;
  int evaluations;
};

inline double call(const gsl_vector* v, void* params) {
  auto* t = static_cast<Trampoline*>(params);
  ++t->evaluations;
  return (*t->f)(std::span<const double>(v->data, v->size));
}

}  // namespace detail

/// Minimizes f from x0 with initial simplex steps `step`; stops when the simplex size
/// drops below size_tol or after max_iterations.
inline SimplexResult nelder_mead(const Objective& f, std::span<const double> x0, std::span<const double> step,
                                 double size_tol, int max_iterations) {
  require(!x0.empty() && x0.size() == step.size(), "nelder_mead: x0 and step must have equal nonzero size");
  const std::size_t dim = x0.size();
  detail::Trampoline t{&f, 0};
  gsl_multimin_function fn{&detail::call, dim, &t};
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(dim), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> s(gsl_vector_alloc(dim), &gsl_vector_free);
  for (std::size_t i = 0; i < dim; ++i) {
    gsl_vector_set(x.get(), i, x0[i]);
    gsl_vector_set(s.get(), i, step[i]);
  }
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> mm(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim), &gsl_multimin_fminimizer_free);
  gsl_set_error_handler_off();
  if (gsl_multimin_fminimizer_set(mm.get(), &fn, x.get(), s.get()) != GSL_SUCCESS) {
    throw ComputationError("nelder_mead: initialization failed");
  }
  SimplexResult res;
  for (int it = 0; it < max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(mm.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm.get()), size_tol) == GSL_SUCCESS) {
      res.converged = true;
      break;
    }
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(mm.get());
  res.x.assign(best->data, best->data + best->size);
  res.value = gsl_multimin_fminimizer_minimum(mm.get());
  res.evaluations = t.evaluations;
  return res;
}

}  // namespace lipvar::optimize
