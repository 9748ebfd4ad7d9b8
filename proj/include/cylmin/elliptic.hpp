#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cylmin/errors.hpp"
#include "cylmin/grid.hpp"
#include "cylmin/numerics.hpp"

// Degree-zero in-plane ground states. The lifted angle solves the pendulum
// equation theta'' = kappa2 sin(theta) cos(theta) with theta(pi) = theta(-pi) - 2 pi;
// its solutions are theta(t) = am(-alpha t + b) where am inverts
// F(theta) = int_{-pi}^{theta} dx / sqrt(1 + (kappa2 / alpha^2) sin^2 x).

namespace cylmin {

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("elliptic: alpha must be positive");
}

inline double amplitude_integrand(double x, double ratio) {
  const double s = std::sin(x);
  return 1.0 / std::sqrt(1.0 + ratio * s * s);
}

// int_0^r of the pi-periodic amplitude integrand, r in [0, pi].
inline double amplitude_partial(double r, double ratio) {
  if (r <= 0.0) return 0.0;
  if (ratio == 0.0) return r;
  return numerics::integrate([ratio](double x) { return amplitude_integrand(x, ratio); }, 0.0, r);
}

// int_0^pi of the amplitude integrand; F advances by this per half turn.
inline double amplitude_half_period(double ratio) {
  if (ratio == 0.0) return pi;
  return 2.0 * numerics::integrate([ratio](double x) { return amplitude_integrand(x, ratio); }, 0.0,
                                   0.5 * pi);
}

}  // namespace detail

/// (1/2pi) int_{-pi}^{pi} dx / sqrt(alpha^2 + kappa2 sin^2 x); decreasing in alpha.
inline double alpha_mean_integrand(double alpha, double kappa2) {
  detail::require_alpha(alpha);
  if (kappa2 == 0.0) return 1.0 / alpha;
  const double a2 = alpha * alpha;
  // pi-periodic and even: four quarter periods.
  const double quarter = numerics::integrate(
      [a2, kappa2](double x) {
        const double s = std::sin(x);
        return 1.0 / std::sqrt(a2 + kappa2 * s * s);
      },
      0.0, 0.5 * pi);
  return 4.0 * quarter / two_pi;
}

/// Unique alpha > 0 with alpha_mean_integrand(alpha, kappa2) = 1.
inline double solve_alpha(double kappa2) {
  if (!(kappa2 >= 0.0)) throw std::invalid_argument("solve_alpha: kappa2 must be >= 0");
  if (kappa2 == 0.0) return 1.0;
  const auto residual = [kappa2](double a) { return alpha_mean_integrand(a, kappa2) - 1.0; };
  double lo = 1e-6, hi = 10.0;
  // The mean diverges only logarithmically as alpha -> 0; large kappa2 needs a lower start.
  while (residual(lo) <= 0.0 && lo > 1e-300) lo *= 1e-6;
  while (residual(hi) >= 0.0 && hi < 1e300) hi *= 10.0;
  return numerics::find_root(residual, lo, hi, "solve_alpha").x;
}

/// F(theta) = int_{-pi}^{theta} dx / sqrt(1 + (kappa2/alpha^2) sin^2 x).
inline double elliptic_F(double theta, double kappa2, double alpha) {
  detail::require_alpha(alpha);
  const double ratio = kappa2 / (alpha * alpha);
  const double half = detail::amplitude_half_period(ratio);
  const double shifted = theta + pi;
  const double turns = std::floor(shifted / pi);
  const double r = std::clamp(shifted - turns * pi, 0.0, pi);
  return turns * half + detail::amplitude_partial(r, ratio);
}

/// Inverse of elliptic_F in theta (Jacobi amplitude).
inline double jacobi_am(double y, double kappa2, double alpha) {
  detail::require_alpha(alpha);
  const double ratio = kappa2 / (alpha * alpha);
  const double half = detail::amplitude_half_period(ratio);
  const double turns = std::floor(y / half);
  const double target = std::clamp(y - turns * half, 0.0, half);

  // Solve G(x) = target for x in [0, pi], G(x) = int_0^x integrand; G' > 0.
  double lo = 0.0, hi = pi;
  double x = pi * target / half;
  for (int it = 0; it < 100; ++it) {
    const double gx = detail::amplitude_partial(x, ratio) - target;
    if (std::abs(gx) <= 1e-14 * std::max(1.0, half)) break;
    if (gx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - gx / detail::amplitude_integrand(x, ratio);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * pi) {
      x = next;
      break;
    }
    x = next;
  }
  return -pi + turns * pi + x;
}

/// E = int_{-pi}^{pi} sqrt(1 + (kappa2/alpha^2) sin^2 x) dx.
inline double complete_E(double kappa2, double alpha) {
  detail::require_alpha(alpha);
  const double ratio = kappa2 / (alpha * alpha);
  if (ratio == 0.0) return two_pi;
  return 4.0 * numerics::integrate(
                   [ratio](double x) {
                     const double s = std::sin(x);
                     return std::sqrt(1.0 + ratio * s * s);
                   },
                   0.0, 0.5 * pi);
}

/// -2 pi (1 + alpha^2) + 2 alpha E: minimal energy in the degree-zero class.
inline double degree_zero_energy(double alpha, double complete) {
  return -two_pi * (1.0 + alpha * alpha) + 2.0 * alpha * complete;
}

struct EllipticSolution {
  double kappa2 = 0.0;
  double alpha = 1.0;
  double E_complete = two_pi;
  double F_period = two_pi;
  double energy_deg0 = 0.0;
};

inline EllipticSolution solve_elliptic(double kappa2) {
  EllipticSolution s;
  s.kappa2 = kappa2;
  s.alpha = solve_alpha(kappa2);
  s.E_complete = complete_E(kappa2, s.alpha);
  s.F_period = elliptic_F(pi, kappa2, s.alpha);
  s.energy_deg0 = degree_zero_energy(s.alpha, s.E_complete);
  return s;
}

/// Lift parameter b placing theta(-pi) = pi.
inline double default_family_offset(double alpha) { return pi * alpha; }

struct DegreeZeroMinimizer {
  AngleProfile profile;
  VectorField field;
};

/// theta(t) = am(-alpha t + b) sampled on the grid, and sin(theta) tau + cos(theta) n.
inline DegreeZeroMinimizer degree_zero_minimizer(double kappa2, double b, const PeriodicGrid& grid) {
  if (!(kappa2 > 0.0)) throw std::invalid_argument("degree_zero_minimizer: kappa2 must be > 0");
  const double alpha = solve_alpha(kappa2);
  AngleProfile profile{grid, std::vector<double>(grid.size()), -1};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    profile.theta[i] = jacobi_am(-alpha * grid.node(i) + b, kappa2, alpha);
  }
  auto field = profile.reconstruct();
  return {std::move(profile), std::move(field)};
}

inline DegreeZeroMinimizer degree_zero_minimizer(double kappa2, const PeriodicGrid& grid) {
  return degree_zero_minimizer(kappa2, default_family_offset(solve_alpha(kappa2)), grid);
}

/// h(kappa2) = -2 pi alpha^2 + 2 alpha E - 4 pi; zero where degree 0 and 1 tie.
inline double threshold_residual(double kappa2) {
  const double alpha = solve_alpha(kappa2);
  return -two_pi * alpha * alpha + 2.0 * alpha * complete_E(kappa2, alpha) - 2.0 * two_pi;
}

struct ThresholdResult {
  double kappa2 = 0.0;
  double residual = 0.0;
};

inline constexpr double threshold_bracket_lo = 2.0;
inline constexpr double threshold_bracket_hi = 3.0;

/// Anisotropy at which degree-zero and degree-one in-plane minimizers coexist.
inline ThresholdResult solve_threshold() {
  const auto root = numerics::find_root(threshold_residual, threshold_bracket_lo,
                                        threshold_bracket_hi, "solve_threshold");
  return {root.x, root.residual};
}

/// Samples of the pendulum first integral f(x, y) = y^2 - kappa2 sin^2 x.
struct PhaseCurve {
  double level = 0.0;
  int branch = 1;  // sign of y
  std::vector<double> x;
  std::vector<double> y;
};

inline double pendulum_first_integral(double x, double y, double kappa2) {
  const double s = std::sin(x);
  return y * y - kappa2 * s * s;
}

/// Level curves y = +-sqrt(c + kappa2 sin^2 x) on [-pi, pi]; level 0 is the
/// separatrix. Points where the root is imaginary are skipped.
inline std::vector<PhaseCurve> phase_portrait(double kappa2, const std::vector<double>& levels,
                                              std::size_t samples) {
  if (!(kappa2 > 0.0)) throw std::invalid_argument("phase_portrait: kappa2 must be > 0");
  if (samples < 2) throw std::invalid_argument("phase_portrait: need at least 2 samples");
  std::vector<PhaseCurve> out;
  for (double c : levels) {
    for (int branch : {1, -1}) {
      PhaseCurve curve{c, branch, {}, {}};
      for (std::size_t i = 0; i < samples; ++i) {
        const double x = -pi + two_pi * static_cast<double>(i) / static_cast<double>(samples - 1);
        const double s = std::sin(x);
        const double r = c + kappa2 * s * s;
        if (r < 0.0) continue;
        curve.x.push_back(x);
        curve.y.push_back(branch * std::sqrt(r));
      }
      out.push_back(std::move(curve));
    }
  }
  return out;
}

}  // namespace cylmin
