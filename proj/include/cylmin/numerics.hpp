#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "cylmin/errors.hpp"

namespace cylmin::numerics {

inline constexpr double default_quadrature_tol = 1e-13;

namespace detail {

template <class F>
double gauss16(const F& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 16>::integrate(f, a, b);
}

template <class F>
double adaptive_gauss(const F& f, double a, double b, double whole, double tol, double floor,
                      int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss16(f, a, mid);
  const double right = gauss16(f, mid, b);
  const double refined = left + right;
  // Below a few ulps of the panel or the total further splitting only adds rounding.
  if (std::abs(refined - whole) <= std::max({tol, floor, 1e-15 * std::abs(refined)})) return refined;
  if (depth <= 0) {
    throw NumericalFailure("adaptive_gauss: no convergence on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
  }
  return adaptive_gauss(f, a, mid, left, 0.5 * tol, floor, depth - 1) +
         adaptive_gauss(f, mid, b, right, 0.5 * tol, floor, depth - 1);
}

}  // namespace detail

/// Composite 16-point Gauss-Legendre with bisection of panels until the
/// halved estimate agrees with the parent to the absolute tolerance.
template <class F>
double integrate(const F& f, double a, double b, double tol = default_quadrature_tol) {
  if (a == b) return 0.0;
  const double whole = detail::gauss16(f, a, b);
  return detail::adaptive_gauss(f, a, b, whole, tol, 1e-17 * std::abs(whole), 50);
}

struct Root {
  double x = 0.0;
  double residual = 0.0;
  std::uintmax_t iterations = 0;
};

/// Bracketed root of a continuous function with a sign change on [lo, hi].
template <class F>
Root find_root(const F& f, double lo, double hi, const std::string& what) {
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw NumericalFailure(what + ": no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
  }
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  // Pick the bracket end with the smaller residual.
  const double ra = f(bracket.first), rb = f(bracket.second);
  return std::abs(ra) <= std::abs(rb) ? Root{bracket.first, ra, iters}
                                      : Root{bracket.second, rb, iters};
}

/// 1-D minimization on [lo, hi] (Brent's parabolic/golden-section search).
template <class F>
std::pair<double, double> minimize_scalar(const F& f, double lo, double hi) {
  return boost::math::tools::brent_find_minima(f, lo, hi, 40);
}

}  // namespace cylmin::numerics
