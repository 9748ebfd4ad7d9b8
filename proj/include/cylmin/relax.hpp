#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cylmin/energy.hpp"
#include "cylmin/grid.hpp"

// Relaxed problem: the pointwise unit constraint is replaced by
// (1/2pi) int |u|^2 = 1, and the ground-state energy becomes the sharp
// constant in int |u'|^2 + kappa2 int |u x n|^2 >= c^2 int |u|^2.

namespace cylmin {

enum class Regime { subcritical, critical, supercritical };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

inline constexpr double critical_kappa2 = 3.0;
inline constexpr double regime_tolerance = 1e-12;

struct PoincareResult {
  double kappa2 = 0.0;
  double omega2 = 0.0;
  double c2_closed = 0.0;
  double c2_numeric = std::numeric_limits<double>::quiet_NaN();
  double phi_kappa = 0.0;
  Regime regime = Regime::subcritical;
};

struct ExtremalParams {
  double theta = 0.0;
  double rho1 = 0.0;  // critical regime only
  int branch = 1;     // sign of the constant normal part (kappa2 >= 3); -1 selects -n
};

inline void require_positive_kappa2(double kappa2, const char* who) {
  if (!(kappa2 > 0.0) || !std::isfinite(kappa2)) {
    throw std::invalid_argument(std::string(who) + ": kappa2 must be finite and > 0");
  }
}

/// Lowest relaxed energy within Fourier block n: kappa2/2 + n^2 + 1 - sqrt(kappa2^2 + 16 n^2)/2
/// for n >= 1, and 1 for the n = 0 normal mode.
inline double block_eigenvalue(int n, double kappa2) {
  if (n < 0) throw std::invalid_argument("block_eigenvalue: n must be >= 0");
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n) * n;
  return 0.5 * kappa2 + nn + 1.0 - 0.5 * std::sqrt(kappa2 * kappa2 + 16.0 * nn);
}

inline Regime classify_regime(double kappa2) {
  if (std::abs(kappa2 - critical_kappa2) <= regime_tolerance) return Regime::critical;
  return kappa2 > critical_kappa2 ? Regime::supercritical : Regime::subcritical;
}

inline PoincareResult closed_form_constant(double kappa2) {
  require_positive_kappa2(kappa2, "closed_form_constant");
  PoincareResult r;
  r.kappa2 = kappa2;
  r.omega2 = std::sqrt(kappa2 * kappa2 + 16.0);
  r.c2_closed = kappa2 >= critical_kappa2 ? 1.0 : 0.5 * (kappa2 - r.omega2 + 4.0);
  r.phi_kappa = 0.5 * std::atan(4.0 / kappa2);
  r.regime = classify_regime(kappa2);
  return r;
}

/// (0, min(kappa2/2, 1)]: any admissible relaxed energy lies in this range.
inline std::pair<double, double> relaxed_energy_bounds(double kappa2) {
  require_positive_kappa2(kappa2, "relaxed_energy_bounds");
  return {0.0, std::min(0.5 * kappa2, 1.0)};
}

/// Stiffness matrix of the relaxed energy on R^{3N}, node-major
/// (index 3i + c), with the rectangle-rule mass h folded out.
inline Eigen::MatrixXd relaxed_operator(double kappa2, const PeriodicGrid& grid) {
  const std::size_t n = grid.size();
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& nrm = grid.normal(i);
    a.block<3, 3>(3 * i, 3 * i) = 2.0 * inv_d2 * Mat3::Identity() +
                                  kappa2 * (Mat3::Identity() - nrm * nrm.transpose());
    const std::size_t j = grid.next(i);
    a.block<3, 3>(3 * i, 3 * j) -= inv_d2 * Mat3::Identity();
    a.block<3, 3>(3 * j, 3 * i) -= inv_d2 * Mat3::Identity();
  }
  return a;
}

struct RelaxedSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // empty unless requested; columns node-major
};

/// Spectrum of A u = lambda M u with M = h I (rectangle-rule mass).
inline RelaxedSpectrum relaxed_spectrum(double kappa2, const PeriodicGrid& grid,
                                        bool with_vectors = false) {
  require_positive_kappa2(kappa2, "relaxed_spectrum");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      relaxed_operator(kappa2, grid),
      with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("relaxed_spectrum: eigensolver failed");
  RelaxedSpectrum out;
  out.eigenvalues = es.eigenvalues();
  if (with_vectors) out.eigenvectors = es.eigenvectors();
  return out;
}

/// Smallest eigenvalue of the discretized relaxed problem.
inline double numerical_constant(double kappa2, const PeriodicGrid& grid) {
  return relaxed_spectrum(kappa2, grid).eigenvalues(0);
}

/// closed_form_constant with c2_numeric filled from the discrete spectrum.
inline PoincareResult poincare_constant(double kappa2, const PeriodicGrid& grid) {
  auto r = closed_form_constant(kappa2);
  r.c2_numeric = numerical_constant(kappa2, grid);
  return r;
}

/// (int |u'|^2 + kappa2 int |u x n|^2) / int |u|^2 with the circle discretization.
inline double rayleigh_quotient(const VectorField& field, double kappa2) {
  const auto parts = detail::circle_parts(field.grid(), field.view(), kappa2);
  double mass = 0.0;
  for (const auto& v : field.values()) mass += v.squaredNorm();
  return (parts.dirichlet + parts.anisotropy) / (field.grid().spacing() * mass);
}

inline constexpr double max_critical_rho1 = 0.44721359549995793;  // 1/sqrt(5)

/// Equality cases of the sharp inequality, normalized to (1/2pi) int |u|^2 = 1:
/// +n above kappa2 = 3, the (theta, rho1) family at 3, the phi_kappa family below.
inline VectorField extremal_field(double kappa2, const ExtremalParams& params,
                                  const PeriodicGrid& grid) {
  const auto pc = closed_form_constant(kappa2);
  if (pc.regime == Regime::critical &&
      (params.rho1 < 0.0 || params.rho1 > max_critical_rho1 + 1e-15)) {
    throw std::invalid_argument("extremal_field: rho1 must lie in [0, 1/sqrt(5)]");
  }
  const double r2 = std::sqrt(2.0);
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    double m1 = 0.0, m2 = params.branch < 0 ? -1.0 : 1.0;
    if (pc.regime == Regime::critical) {
      const double rho = params.rho1;
      m1 = r2 * rho * std::cos(params.theta + t);
      m2 = (params.branch < 0 ? -1.0 : 1.0) * std::sqrt(std::max(0.0, 1.0 - 5.0 * rho * rho)) +
           2.0 * r2 * rho * std::sin(params.theta + t);
    } else if (pc.regime == Regime::subcritical) {
      m1 = r2 * std::sin(pc.phi_kappa) * std::cos(params.theta + t);
      m2 = r2 * std::cos(pc.phi_kappa) * std::sin(params.theta + t);
    }
    v[i] = m1 * grid.tangent(i) + m2 * grid.normal(i);
  }
  return VectorField(grid, std::move(v), ConstraintKind::unconstrained);
}

}  // namespace cylmin
