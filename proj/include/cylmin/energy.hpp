#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylmin/grid.hpp"

namespace cylmin {

struct EnergyParams {
  double kappa2 = 1.0;

  explicit EnergyParams(double k2) : kappa2(k2) {
    if (!(k2 >= 0.0) || !std::isfinite(k2)) {
      throw std::invalid_argument("EnergyParams: kappa2 must be finite and >= 0");
    }
  }

  /// kappa2 == 0: every constant field is a minimizer.
  bool degenerate() const { return kappa2 == 0.0; }
};

struct EnergyReport {
  double kappa2 = 0.0;
  double dirichlet = 0.0;
  double anisotropy = 0.0;
  double total = 0.0;
  bool degenerate = false;
};

namespace detail {

struct EnergyParts {
  double dirichlet = 0.0;
  double anisotropy = 0.0;
};

// Rectangle rule in t (exact for trigonometric polynomials of degree < N),
// chord-scaled forward differences for the derivative.
inline EnergyParts circle_parts(const PeriodicGrid& grid, std::span<const Vec3> u, double kappa2) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  double dir = 0.0, an = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dir += (u[grid.next(i)] - u[i]).squaredNorm();
    an += u[i].cross(grid.normal(i)).squaredNorm();
  }
  return {h * inv_d2 * dir, h * kappa2 * an};
}

// Unprojected L2 gradient: -2 lap u + 2 kappa2 (u - (u.n) n).
inline void circle_raw_gradient(const PeriodicGrid& grid, std::span<const Vec3> u, double kappa2,
                                std::span<Vec3> out) {
  const std::size_t n = grid.size();
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& nrm = grid.normal(i);
    const Vec3 lap = (u[grid.next(i)] - 2.0 * u[i] + u[grid.prev(i)]) * inv_d2;
    out[i] = -2.0 * lap + 2.0 * kappa2 * (u[i] - u[i].dot(nrm) * nrm);
  }
}

inline void project_tangent(std::span<const Vec3> u, std::span<Vec3> g) {
  for (std::size_t i = 0; i < u.size(); ++i) g[i] -= g[i].dot(u[i]) * u[i];
}

// Cylinder of K rings, ring-major flat storage. Trapezoid weights in z, forward
// differences between adjacent rings (natural boundary at z = +-1).
inline EnergyParts cylinder_parts(const PeriodicGrid& grid, std::size_t z_count, double dz,
                                  std::span<const Vec3> m, double kappa2) {
  const std::size_t n = grid.size();
  EnergyParts out;
  for (std::size_t k = 0; k < z_count; ++k) {
    const double w = (k == 0 || k + 1 == z_count) ? 0.5 * dz : dz;
    const auto ring = circle_parts(grid, m.subspan(k * n, n), kappa2);
    out.dirichlet += w * ring.dirichlet;
    out.anisotropy += w * ring.anisotropy;
  }
  const double h = grid.spacing();
  double axial = 0.0;
  for (std::size_t k = 0; k + 1 < z_count; ++k) {
    for (std::size_t i = 0; i < n; ++i) axial += (m[(k + 1) * n + i] - m[k * n + i]).squaredNorm();
  }
  out.dirichlet += h * axial / dz;
  return out;
}

inline double cylinder_axial_dirichlet(const PeriodicGrid& grid, std::size_t z_count, double dz,
                                       std::span<const Vec3> m) {
  const std::size_t n = grid.size();
  double axial = 0.0;
  for (std::size_t k = 0; k + 1 < z_count; ++k) {
    for (std::size_t i = 0; i < n; ++i) axial += (m[(k + 1) * n + i] - m[k * n + i]).squaredNorm();
  }
  return grid.spacing() * axial / dz;
}

// L2 gradient with respect to the lumped mass (trapezoid weight times h).
inline void cylinder_raw_gradient(const PeriodicGrid& grid, std::size_t z_count, double dz,
                                  std::span<const Vec3> m, double kappa2, std::span<Vec3> out) {
  const std::size_t n = grid.size();
  const double inv_dz2 = 1.0 / (dz * dz);
  for (std::size_t k = 0; k < z_count; ++k) {
    circle_raw_gradient(grid, m.subspan(k * n, n), kappa2, out.subspan(k * n, n));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& c = m[k * n + i];
      Vec3 axial = Vec3::Zero();
      if (k == 0) {
        axial = 2.0 * (m[n + i] - c) * inv_dz2;
      } else if (k + 1 == z_count) {
        axial = 2.0 * (m[(k - 1) * n + i] - c) * inv_dz2;
      } else {
        axial = (m[(k + 1) * n + i] - 2.0 * c + m[(k - 1) * n + i]) * inv_dz2;
      }
      out[k * n + i] -= 2.0 * axial;
    }
  }
}

inline EnergyReport make_report(double kappa2, EnergyParts p) {
  return {kappa2, p.dirichlet, p.anisotropy, p.dirichlet + p.anisotropy, kappa2 == 0.0};
}

}  // namespace detail

/// F(u) = int |u'|^2 + kappa2 int |u x n|^2 over [-pi, pi].
inline EnergyReport circle_energy(const VectorField& field, const EnergyParams& params) {
  return detail::make_report(params.kappa2,
                             detail::circle_parts(field.grid(), field.view(), params.kappa2));
}

/// E(m) over [-1, 1] x [-pi, pi]; a z-invariant field gives twice the ring energy.
inline EnergyReport cylinder_energy(const CylinderField& field, const EnergyParams& params) {
  if (field.z_count() < 3) throw std::invalid_argument("cylinder_energy: need at least 3 z nodes");
  const auto flat = field.flatten();
  return detail::make_report(params.kappa2,
                             detail::cylinder_parts(field.grid(), field.z_count(), field.z_spacing(),
                                                    flat, params.kappa2));
}

/// L2 norm of the axial derivative.
inline double axial_derivative_norm(const CylinderField& field) {
  const auto flat = field.flatten();
  return std::sqrt(
      detail::cylinder_axial_dirichlet(field.grid(), field.z_count(), field.z_spacing(), flat));
}

/// Tangent-projected L2 gradient of circle_energy.
inline std::vector<Vec3> energy_gradient(const VectorField& field, const EnergyParams& params) {
  std::vector<Vec3> g(field.size());
  detail::circle_raw_gradient(field.grid(), field.view(), params.kappa2, g);
  detail::project_tangent(field.view(), g);
  return g;
}

/// Discrete L2 inner product on the circle.
inline double l2_dot(const PeriodicGrid& grid, std::span<const Vec3> a, std::span<const Vec3> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return grid.spacing() * s;
}

/// Norm of the projected Euler-Lagrange residual; zero iff discretely critical.
inline double el_residual(const VectorField& field, const EnergyParams& params) {
  const auto g = energy_gradient(field, params);
  return std::sqrt(l2_dot(field.grid(), g, g));
}

namespace detail {

// Pointwise multiplier |grad u|^2 - kappa2 (u.n)^2, with |grad u|^2 averaged
// over the two edges at node i. Equals u_i . (-lap u_i) - kappa2 (u_i.n_i)^2.
inline std::vector<double> multiplier(const PeriodicGrid& grid, std::span<const Vec3> u,
                                      double kappa2) {
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  std::vector<double> lam(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double grad2 = 0.5 * inv_d2 *
                         ((u[grid.next(i)] - u[i]).squaredNorm() + (u[i] - u[grid.prev(i)]).squaredNorm());
    const double un = u[i].dot(grid.normal(i));
    lam[i] = grad2 - kappa2 * un * un;
  }
  return lam;
}

}  // namespace detail

/// Axial length of the cylinder; z-invariant quantities pick up this factor.
inline constexpr double cylinder_length = 2.0;

/**
 * Quadratic form int |phi'|^2 - kappa2 (phi.n)^2 - (|u'|^2 - kappa2 (u.n)^2)|phi|^2
 * for a direction tangent to u at every node, evaluated on the z-invariant
 * extension to the cylinder (factor 2 over the circle integral).
 */
inline double second_variation_value(const VectorField& field, const EnergyParams& params,
                                     std::span<const Vec3> direction) {
  const auto& grid = field.grid();
  if (direction.size() != grid.size()) {
    throw std::invalid_argument("second_variation_value: direction size mismatch");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(direction[i].dot(field[i])) > 1e-10) {
      throw std::invalid_argument("second_variation_value: direction is not tangent at node " +
                                  std::to_string(i));
    }
  }
  const auto lam = detail::multiplier(grid, field.view(), params.kappa2);
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  double q = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double pn = direction[i].dot(grid.normal(i));
    q += (direction[grid.next(i)] - direction[i]).squaredNorm() * inv_d2 -
         params.kappa2 * pn * pn - lam[i] * direction[i].squaredNorm();
  }
  return cylinder_length * grid.spacing() * q;
}

/// Orthonormal basis of the tangent plane at u, built from the two members of
/// {tau, n, e3} least parallel to u.
inline std::array<Vec3, 2> tangent_basis(const Vec3& u, const Vec3& tangent, const Vec3& normal) {
  std::array<Vec3, 3> cand{tangent, normal, Vec3::UnitZ()};
  std::stable_sort(cand.begin(), cand.end(), [&](const Vec3& a, const Vec3& b) {
    return std::abs(a.dot(u)) < std::abs(b.dot(u));
  });
  Vec3 b1 = cand[0] - cand[0].dot(u) * u;
  b1.normalize();
  Vec3 b2 = cand[1] - cand[1].dot(u) * u - cand[1].dot(b1) * b1;
  b2.normalize();
  return {b1, b2};
}

/// Second-variation matrix in the per-node tangent basis, scaled by the
/// lumped mass so its eigenvalues are Rayleigh quotients over the circle.
inline Eigen::MatrixXd second_variation_matrix(const VectorField& field,
                                               const EnergyParams& params) {
  const auto& grid = field.grid();
  const std::size_t n = grid.size();
  const double inv_d2 = 1.0 / (grid.difference_scale() * grid.difference_scale());
  const auto lam = detail::multiplier(grid, field.view(), params.kappa2);

  std::vector<Eigen::Matrix<double, 3, 2>> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = tangent_basis(field[i], grid.tangent(i), grid.normal(i));
    basis[i].col(0) = b[0];
    basis[i].col(1) = b[1];
  }

  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& nrm = grid.normal(i);
    const Eigen::RowVector2d bn = nrm.transpose() * basis[i];
    hess.block<2, 2>(2 * i, 2 * i) += (2.0 * inv_d2 - lam[i]) * Eigen::Matrix2d::Identity() -
                                      params.kappa2 * bn.transpose() * bn;
    const std::size_t j = grid.next(i);
    const Eigen::Matrix2d coupling = -inv_d2 * basis[i].transpose() * basis[j];
    hess.block<2, 2>(2 * i, 2 * j) += coupling;
    hess.block<2, 2>(2 * j, 2 * i) += coupling.transpose();
  }
  return hess;
}

/// Smallest eigenvalue of the discrete second variation restricted to
/// node-wise tangent directions, per unit L2 mass on the circle.
inline double second_variation_min_eig(const VectorField& field, const EnergyParams& params) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(second_variation_matrix(field, params),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace cylmin
