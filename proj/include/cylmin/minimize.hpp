#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cylmin/elliptic.hpp"
#include "cylmin/energy.hpp"
#include "cylmin/errors.hpp"
#include "cylmin/grid.hpp"
#include "cylmin/numerics.hpp"
#include "cylmin/relax.hpp"

namespace cylmin {

enum class Constraint { none, in_plane, weakly_axially_symmetric };

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::none: return "none";
    case Constraint::in_plane: return "in-plane";
    case Constraint::weakly_axially_symmetric: return "was";
  }
  return "unknown";
}

inline Constraint parse_constraint(std::string_view s) {
  if (s == "none") return Constraint::none;
  if (s == "in-plane") return Constraint::in_plane;
  if (s == "was") return Constraint::weakly_axially_symmetric;
  throw std::invalid_argument("unknown constraint '" + std::string(s) + "'");
}

struct DescentOptions {
  std::size_t max_iters = 200000;
  double step = 1.0;          // cap on the trial step; later trials start at twice the last accepted step
  double grad_tol = 1e-6;     // L2 norm of the (constrained) gradient
  double energy_tol = 1e-15;  // relative energy decrement
  std::uint64_t seed = 0;
  Constraint constraint = Constraint::none;

  void validate() const {
    if (!(step > 0.0) || !(grad_tol > 0.0) || !(energy_tol > 0.0)) {
      throw std::invalid_argument("DescentOptions: step and tolerances must be positive");
    }
  }
};

template <class Field>
struct DescentTrace {
  std::vector<double> energies;  // energies.front() is the initial energy
  Field final_field;
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;

  double final_energy() const { return energies.back(); }
};

/// Called after every accepted step with the iteration count and the new iterate.
using DescentObserver = std::function<void(std::size_t, std::span<const Vec3>)>;

inline constexpr double was_tolerance = 1e-10;

/// Accepted steps must realize this fraction of the first-order decrease
/// s |g|^2. At one half, steps on stiff modes stop short of the stability
/// edge where the plain-decrease rule lets grid-scale oscillations linger.
inline constexpr double armijo_fraction = 0.5;

namespace detail {

inline void normalize_all(std::span<Vec3> u) {
  for (auto& v : u) {
    const double len = v.norm();
    if (!(len > 1e-300)) throw NumericalFailure("descent: iterate collapsed to zero");
    v /= len;
  }
}

// Largest |ring average of the in-plane part| over the rings.
inline double max_ring_inplane_mean(std::span<const Vec3> m, std::size_t ring_size) {
  double worst = 0.0;
  for (std::size_t k = 0; k * ring_size < m.size(); ++k) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < ring_size; ++i) {
      sx += m[k * ring_size + i].x();
      sy += m[k * ring_size + i].y();
    }
    worst = std::max(worst, std::hypot(sx, sy) / static_cast<double>(ring_size));
  }
  return worst;
}

inline void subtract_ring_inplane_mean(std::span<Vec3> m, std::size_t ring_size) {
  for (std::size_t k = 0; k * ring_size < m.size(); ++k) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < ring_size; ++i) {
      sx += m[k * ring_size + i].x();
      sy += m[k * ring_size + i].y();
    }
    sx /= static_cast<double>(ring_size);
    sy /= static_cast<double>(ring_size);
    for (std::size_t i = 0; i < ring_size; ++i) {
      m[k * ring_size + i].x() -= sx;
      m[k * ring_size + i].y() -= sy;
    }
  }
}

// Alternate mean removal and renormalization until the ring averages vanish.
inline void project_was(std::span<Vec3> m, std::size_t ring_size) {
  for (int it = 0; it < 100; ++it) {
    subtract_ring_inplane_mean(m, ring_size);
    normalize_all(m);
    if (max_ring_inplane_mean(m, ring_size) < 1e-14) break;
  }
  const double residual = max_ring_inplane_mean(m, ring_size);
  if (residual >= was_tolerance) {
    throw NumericalFailure("descent: ring averages did not vanish after projection (" +
                           std::to_string(residual) + ")");
  }
}

// Solves (I - Lap) p = g node-wise per component, with Lap the same periodic
// stencil in t as the energy and, on the cylinder, the lumped-mass stencil in z.
// Stored in the mass-weighted symmetric form so one LDLT factorization serves
// the whole run. The operator commutes with ring averages and with the
// rotation shift, so the preconditioned direction keeps every constraint.
class SmoothingPreconditioner {
 public:
  SmoothingPreconditioner(std::size_t ring_size, double inv_t2, std::size_t z_count = 1,
                          double dz = 0.0)
      : ring_size_(ring_size), z_count_(z_count), weights_(z_count, 1.0) {
    const std::size_t total = ring_size * z_count;
    if (z_count > 1) weights_.front() = weights_.back() = 0.5;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(5 * total);
    const double inv_z2 = z_count > 1 ? 1.0 / (dz * dz) : 0.0;
    for (std::size_t k = 0; k < z_count; ++k) {
      const double w = weights_[k];
      for (std::size_t i = 0; i < ring_size; ++i) {
        const auto row = static_cast<int>(k * ring_size + i);
        const auto next = static_cast<int>(k * ring_size + (i + 1) % ring_size);
        double diag = w * (1.0 + 2.0 * inv_t2);
        entries.emplace_back(row, next, -w * inv_t2);
        entries.emplace_back(next, row, -w * inv_t2);
        if (k + 1 < z_count) {
          // Edge (k, k+1) contributes (x_k - x_{k+1})^2 / dz^2 to the form.
          const auto up = static_cast<int>((k + 1) * ring_size + i);
          entries.emplace_back(row, up, -inv_z2);
          entries.emplace_back(up, row, -inv_z2);
          diag += inv_z2;
          entries.emplace_back(up, up, inv_z2);
        }
        entries.emplace_back(row, row, diag);
      }
    }
    Eigen::SparseMatrix<double> a(static_cast<int>(total), static_cast<int>(total));
    a.setFromTriplets(entries.begin(), entries.end());
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) {
      throw NumericalFailure("descent: preconditioner factorization failed");
    }
  }

  void apply(std::span<Vec3> g) const {
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(g.size()), 3);
    for (std::size_t j = 0; j < g.size(); ++j) rhs.row(static_cast<Eigen::Index>(j)) = weight(j) * g[j];
    const Eigen::MatrixXd p = solver_.solve(rhs);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = p.row(static_cast<Eigen::Index>(j)).transpose();
  }

  void apply(std::span<double> g) const {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(g.size()));
    for (std::size_t j = 0; j < g.size(); ++j) rhs(static_cast<Eigen::Index>(j)) = weight(j) * g[j];
    const Eigen::VectorXd p = solver_.solve(rhs);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = p(static_cast<Eigen::Index>(j));
  }

 private:
  double weight(std::size_t flat_index) const { return weights_[flat_index / ring_size_]; }

  std::size_t ring_size_;
  std::size_t z_count_;
  std::vector<double> weights_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

struct DescentProblem {
  std::function<double(std::span<const Vec3>)> energy;
  std::function<void(std::span<const Vec3>, std::span<Vec3>)> raw_gradient;
  std::vector<double> weights;  // lumped mass per node
  std::size_t ring_size = 0;
  const SmoothingPreconditioner* preconditioner = nullptr;
  double kappa2 = 0.0;
};

struct DescentOutcome {
  std::vector<double> energies;
  std::vector<Vec3> state;
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

inline double weighted_norm(std::span<const Vec3> g, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += w[i] * g[i].squaredNorm();
  return std::sqrt(s);
}

// Largest step keeping every linearized mode of the preconditioned flow
// contractive: the smoothed Dirichlet part is bounded by 2, the anisotropy by
// 2 kappa2 and the constraint term by twice the largest pointwise multiplier.
// Longer steps let rounding noise in grid-scale modes grow geometrically
// before the line search sees it, which breaks symmetries the flow preserves.
inline double stable_step(double kappa2, double max_multiplier) {
  return 1.0 / (2.0 + 2.0 * kappa2 + 2.0 * max_multiplier);
}

inline void check_planar(std::span<const Vec3> v, const char* what) {
  for (const auto& x : v) {
    if (std::abs(x.z()) > 1e-12) throw NumericalFailure(std::string("descent: ") + what + " left the plane");
  }
}

// Projected H1-preconditioned gradient descent with node-wise renormalization
// and halving Armijo backtracking.
inline DescentOutcome projected_descent(std::vector<Vec3> u, const DescentProblem& problem,
                                        const DescentOptions& opts,
                                        const DescentObserver& observer) {
  const bool planar = opts.constraint == Constraint::in_plane;
  const bool was = opts.constraint == Constraint::weakly_axially_symmetric;
  if (was) project_was(u, problem.ring_size);

  DescentOutcome out;
  double energy = problem.energy(u);
  out.energies.push_back(energy);
  std::vector<Vec3> g(u.size()), p(u.size()), trial(u.size());
  double step = opts.step;

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    problem.raw_gradient(u, g);
    double multiplier = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) multiplier = std::max(multiplier, 0.5 * std::abs(u[i].dot(g[i])));
    if (was) subtract_ring_inplane_mean(g, problem.ring_size);
    project_tangent(u, g);
    if (planar) check_planar(g, "gradient");
    out.gradient_norm = weighted_norm(g, problem.weights);
    if (out.gradient_norm < opts.grad_tol) {
      out.converged = true;
      break;
    }

    std::copy(g.begin(), g.end(), p.begin());
    if (problem.preconditioner) problem.preconditioner->apply(p);
    if (was) subtract_ring_inplane_mean(p, problem.ring_size);
    project_tangent(u, p);
    if (planar) {
      for (auto& v : p) v.z() = 0.0;  // rounding only; the solve is component-wise
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) slope += problem.weights[i] * g[i].dot(p[i]);

    double s = std::min({2.0 * step, opts.step, stable_step(problem.kappa2, multiplier)});
    const double first = s;
    double candidate = std::numeric_limits<double>::infinity();
    for (;;) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - s * p[i];
      normalize_all(trial);
      if (was) project_was(trial, problem.ring_size);
      candidate = problem.energy(trial);
      if (candidate < energy - armijo_fraction * s * slope) break;
      s *= 0.5;
      if (s < 1e-16 * first) break;
    }
    if (!(candidate < energy) || s < 1e-16 * first) break;  // stalled at rounding level

    std::swap(u, trial);
    const double decrement = energy - candidate;
    energy = candidate;
    step = s;
    out.energies.push_back(energy);
    out.iterations = it + 1;
    if (planar) check_planar(u, "in-plane iterate");
    if (observer) observer(out.iterations, u);
    if (decrement <= opts.energy_tol * std::max(1.0, std::abs(energy))) {
      out.converged = true;
      break;
    }
  }
  out.state = std::move(u);
  return out;
}

inline void require_unit(std::span<const Vec3> u) {
  for (const auto& v : u) {
    if (std::abs(v.norm() - 1.0) > unit_tolerance) {
      throw std::invalid_argument("descent: initial field is not unit-valued");
    }
  }
}

inline void require_planar(std::span<const Vec3> u) {
  for (const auto& v : u) {
    if (std::abs(v.z()) > unit_tolerance) {
      throw std::invalid_argument("descent: in-plane constraint with a non-planar initial field");
    }
  }
}

}  // namespace detail

/// Energy-decreasing projected gradient flow for the circle energy.
inline DescentTrace<VectorField> descend_circle(const VectorField& init, const EnergyParams& params,
                                                const DescentOptions& opts,
                                                const DescentObserver& observer = {}) {
  opts.validate();
  detail::require_unit(init.view());
  if (opts.constraint == Constraint::in_plane) detail::require_planar(init.view());
  const PeriodicGrid& grid = init.grid();
  const double k2 = params.kappa2;

  detail::DescentProblem problem;
  problem.energy = [&grid, k2](std::span<const Vec3> u) {
    const auto p = detail::circle_parts(grid, u, k2);
    return p.dirichlet + p.anisotropy;
  };
  problem.raw_gradient = [&grid, k2](std::span<const Vec3> u, std::span<Vec3> g) {
    detail::circle_raw_gradient(grid, u, k2, g);
  };
  problem.weights.assign(grid.size(), grid.spacing());
  problem.ring_size = grid.size();
  problem.kappa2 = k2;
  const double d = grid.difference_scale();
  const detail::SmoothingPreconditioner precond(grid.size(), 1.0 / (d * d));
  problem.preconditioner = &precond;

  auto out = detail::projected_descent(init.values(), problem, opts, observer);
  const auto kind = opts.constraint == Constraint::in_plane ? ConstraintKind::in_plane
                                                            : ConstraintKind::unit_sphere;
  return {std::move(out.energies), VectorField(grid, std::move(out.state), kind), out.iterations,
          out.converged, out.gradient_norm};
}

/// Same scheme on the cylinder; the WAS constraint is re-imposed after every step.
inline DescentTrace<CylinderField> descend_cylinder(const CylinderField& init,
                                                    const EnergyParams& params,
                                                    const DescentOptions& opts,
                                                    const DescentObserver& observer = {}) {
  opts.validate();
  if (init.z_count() < 3) throw std::invalid_argument("descend_cylinder: need at least 3 z nodes");
  auto flat = init.flatten();
  detail::require_unit(flat);
  if (opts.constraint == Constraint::in_plane) detail::require_planar(flat);
  const PeriodicGrid& grid = init.grid();
  const std::size_t z_count = init.z_count();
  const double dz = init.z_spacing();
  const double k2 = params.kappa2;

  detail::DescentProblem problem;
  problem.energy = [&grid, z_count, dz, k2](std::span<const Vec3> m) {
    const auto p = detail::cylinder_parts(grid, z_count, dz, m, k2);
    return p.dirichlet + p.anisotropy;
  };
  problem.raw_gradient = [&grid, z_count, dz, k2](std::span<const Vec3> m, std::span<Vec3> g) {
    detail::cylinder_raw_gradient(grid, z_count, dz, m, k2, g);
  };
  problem.weights.resize(flat.size());
  for (std::size_t k = 0; k < z_count; ++k) {
    const double w = (k == 0 || k + 1 == z_count ? 0.5 : 1.0) * dz * grid.spacing();
    std::fill_n(problem.weights.begin() + static_cast<std::ptrdiff_t>(k * grid.size()), grid.size(), w);
  }
  problem.ring_size = grid.size();
  problem.kappa2 = k2;
  const double d = grid.difference_scale();
  const detail::SmoothingPreconditioner precond(grid.size(), 1.0 / (d * d), z_count, dz);
  problem.preconditioner = &precond;

  auto out = detail::projected_descent(std::move(flat), problem, opts, observer);
  const auto kind = opts.constraint == Constraint::in_plane ? ConstraintKind::in_plane
                                                            : ConstraintKind::unit_sphere;
  return {std::move(out.energies),
          CylinderField::from_flat(grid, init.z_nodes(), out.state, kind), out.iterations,
          out.converged, out.gradient_norm};
}

/// In-plane energy in lifted form: int |theta'|^2 + kappa2 sin^2 theta + 2 pi (1 + 2 j).
inline double lifted_energy(const AngleProfile& profile, double kappa2) {
  const auto& grid = profile.grid;
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  double dir = 0.0, an = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? profile.theta[i + 1] : profile.theta_end();
    const double d = (next - profile.theta[i]) / h;
    const double s = std::sin(profile.theta[i]);
    dir += d * d;
    an += s * s;
  }
  return h * (dir + kappa2 * an) + two_pi * (1.0 + 2.0 * profile.j);
}

/// Preconditioned gradient descent on the lift; j is carried by the periodic
/// stencil and never changes.
inline DescentTrace<AngleProfile> descend_theta(const AngleProfile& init, const EnergyParams& params,
                                                const DescentOptions& opts) {
  opts.validate();
  const auto& grid = init.grid;
  const std::size_t n = grid.size();
  if (init.theta.size() != n) throw std::invalid_argument("descend_theta: profile size mismatch");
  const double h = grid.spacing();
  const double shift = two_pi * init.j;
  const double k2 = params.kappa2;
  const double max_step = detail::stable_step(k2, 0.0);
  const detail::SmoothingPreconditioner precond(n, 1.0 / (h * h));

  AngleProfile cur = init;
  AngleProfile trial = init;
  std::vector<double> g(n), p(n);
  double energy = lifted_energy(cur, k2);
  std::vector<double> energies{energy};
  std::size_t iterations = 0;
  bool converged = false;
  double gnorm = 0.0;
  double step = opts.step;

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = i + 1 < n ? cur.theta[i + 1] : cur.theta[0] + shift;
      const double prev = i > 0 ? cur.theta[i - 1] : cur.theta[n - 1] - shift;
      g[i] = -2.0 * (next - 2.0 * cur.theta[i] + prev) / (h * h) + k2 * std::sin(2.0 * cur.theta[i]);
      s2 += g[i] * g[i];
    }
    gnorm = std::sqrt(h * s2);
    if (gnorm < opts.grad_tol) {
      converged = true;
      break;
    }
    p = g;
    precond.apply(p);
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += h * g[i] * p[i];
    double s = std::min({2.0 * step, opts.step, max_step});
    const double first = s;
    double candidate = std::numeric_limits<double>::infinity();
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) trial.theta[i] = cur.theta[i] - s * p[i];
      candidate = lifted_energy(trial, k2);
      if (candidate < energy - armijo_fraction * s * slope) break;
      s *= 0.5;
      if (s < 1e-16 * first) break;
    }
    if (!(candidate < energy)) break;
    std::swap(cur.theta, trial.theta);
    const double decrement = energy - candidate;
    energy = candidate;
    step = s;
    energies.push_back(energy);
    iterations = it + 1;
    if (decrement <= opts.energy_tol * std::max(1.0, std::abs(energy))) {
      converged = true;
      break;
    }
  }
  return {std::move(energies), std::move(cur), iterations, converged, gnorm};
}

// ---------------------------------------------------------------------------
// Initial fields

inline VectorField random_unit_field(const PeriodicGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> v(grid.size());
  for (auto& x : v) {
    do {
      x = Vec3(normal(rng), normal(rng), normal(rng));
    } while (x.norm() < 1e-8);
    x.normalize();
  }
  return VectorField(grid, std::move(v));
}

/// Multistart initial field: one standard normal vector in the moving frame
/// (n, tau, e3) shared by all nodes, plus node-wise normal noise of standard
/// deviation `noise` in the same frame, renormalized. Node-wise noise alone
/// smooths out to a nearly constant Cartesian vector, which only ever reaches
/// the degree-zero in-plane family at large kappa2.
inline VectorField random_start_field(const PeriodicGrid& grid, std::uint64_t seed,
                                      double noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 mean(normal(rng), normal(rng), normal(rng));
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    const Vec3 n(std::cos(t), std::sin(t), 0.0), tau(-std::sin(t), std::cos(t), 0.0);
    do {
      const Vec3 a = mean + noise * Vec3(normal(rng), normal(rng), normal(rng));
      v[i] = a.x() * n + a.y() * tau + Vec3(0.0, 0.0, a.z());
    } while (v[i].norm() < 1e-8);
    v[i].normalize();
  }
  return VectorField(grid, std::move(v));
}

inline VectorField random_in_plane_field(const PeriodicGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-pi, pi);
  std::vector<Vec3> v(grid.size());
  for (auto& x : v) {
    const double a = angle(rng);
    x = Vec3(std::cos(a), std::sin(a), 0.0);
  }
  return VectorField(grid, std::move(v), ConstraintKind::in_plane);
}

inline CylinderField random_cylinder_field(const PeriodicGrid& grid, std::size_t z_count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> flat(grid.size() * z_count);
  for (auto& x : flat) {
    do {
      x = Vec3(normal(rng), normal(rng), normal(rng));
    } while (x.norm() < 1e-8);
    x.normalize();
  }
  return CylinderField::from_flat(grid, CylinderField::uniform_z(z_count), flat);
}

/// Cylinder version of random_start_field: one frame vector for every node.
inline CylinderField random_start_cylinder(const PeriodicGrid& grid, std::size_t z_count,
                                           std::uint64_t seed, double noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 mean(normal(rng), normal(rng), normal(rng));
  std::vector<Vec3> flat(grid.size() * z_count);
  for (std::size_t j = 0; j < flat.size(); ++j) {
    const double t = grid.node(j % grid.size());
    const Vec3 n(std::cos(t), std::sin(t), 0.0), tau(-std::sin(t), std::cos(t), 0.0);
    Vec3& x = flat[j];
    do {
      const Vec3 a = mean + noise * Vec3(normal(rng), normal(rng), normal(rng));
      x = a.x() * n + a.y() * tau + Vec3(0.0, 0.0, a.z());
    } while (x.norm() < 1e-8);
    x.normalize();
  }
  return CylinderField::from_flat(grid, CylinderField::uniform_z(z_count), flat);
}

/// Random field with vanishing in-plane ring averages.
inline CylinderField random_was_field(const PeriodicGrid& grid, std::size_t z_count,
                                      std::uint64_t seed) {
  auto flat = random_cylinder_field(grid, z_count, seed).flatten();
  detail::project_was(flat, grid.size());
  return CylinderField::from_flat(grid, CylinderField::uniform_z(z_count), flat);
}

/// Largest in-plane ring average of a cylinder field.
inline double max_ring_average(const CylinderField& field) {
  return detail::max_ring_inplane_mean(field.flatten(), field.grid().size());
}

/// max over (z, t) of |R(-t) m(z, t) - R(-t0) m(z, t0)|; zero for axially symmetric fields.
inline double axial_symmetry_defect(const PeriodicGrid& grid, std::span<const Vec3> m) {
  const std::size_t n = grid.size();
  double worst = 0.0;
  for (std::size_t k = 0; k * n < m.size(); ++k) {
    const Vec3 ref = rotation(-grid.node(0)) * m[k * n];
    for (std::size_t i = 1; i < n; ++i) {
      worst = std::max(worst, (rotation(-grid.node(i)) * m[k * n + i] - ref).norm());
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Classification against the closed-form minimizers

enum FamilySet : unsigned {
  family_poles = 1u << 0,        // +-n, +-e3
  family_u_theta = 1u << 1,      // R(t)(sin theta, 0, cos theta)
  family_extremal = 1u << 2,     // equality cases of the relaxed problem
  family_degree_zero = 1u << 3,  // am(-alpha t + b) profiles
  family_all = 0xFu,
};

struct FamilyMatch {
  std::string label;
  double distance = std::numeric_limits<double>::infinity();
  double parameter = 0.0;  // theta phase or b, when the family has one
};

inline double max_node_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).norm());
  return worst;
}

namespace detail {

// Coarse scan then bracketed 1-D refinement of a parameterized family.
template <class Sample>
std::pair<double, double> best_parameter(const Sample& distance, double lo, double hi,
                                         std::size_t coarse) {
  double best_x = lo, best_d = std::numeric_limits<double>::infinity();
  const double dx = (hi - lo) / static_cast<double>(coarse);
  for (std::size_t i = 0; i < coarse; ++i) {
    const double x = lo + dx * static_cast<double>(i);
    const double d = distance(x);
    if (d < best_d) {
      best_d = d;
      best_x = x;
    }
  }
  const auto refined = numerics::minimize_scalar(distance, best_x - dx, best_x + dx);
  if (refined.second < best_d) return refined;
  return {best_x, best_d};
}

// Candidates are offered from the most to the least specific family; a later
// one must win by more than this margin. A nearly converged n is then labelled
// normal+ rather than u_theta at theta ~ pi/2.
inline constexpr double match_margin = 1e-6;

inline void consider(FamilyMatch& best, std::string label, double distance, double parameter) {
  if (distance < best.distance - match_margin) best = {std::move(label), distance, parameter};
}

}  // namespace detail

inline FamilyMatch match_to_family(const VectorField& field, double kappa2,
                                   unsigned families = family_all) {
  const auto& grid = field.grid();
  const auto u = field.view();
  FamilyMatch best;

  if (families & family_poles) {
    const auto n = sample_normal_field(grid).values();
    std::vector<Vec3> minus_n(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) minus_n[i] = -n[i];
    detail::consider(best, "normal+", max_node_distance(u, n), 0.0);
    detail::consider(best, "normal-", max_node_distance(u, minus_n), 0.0);
    const std::vector<Vec3> up(grid.size(), Vec3::UnitZ()), down(grid.size(), -Vec3::UnitZ());
    detail::consider(best, "e3+", max_node_distance(u, up), 0.0);
    detail::consider(best, "e3-", max_node_distance(u, down), 0.0);
  }
  if (families & family_u_theta) {
    const auto d = [&](double th) { return max_node_distance(u, sample_u_theta(grid, th).values()); };
    const auto [th, dist] = detail::best_parameter(d, -pi, pi, 72);
    detail::consider(best, "u_theta", dist, th);
  }
  if ((families & family_extremal) && kappa2 > 0.0) {
    const auto regime = classify_regime(kappa2);
    for (int branch : {1, -1}) {
      const auto d = [&](double th) {
        return max_node_distance(u, extremal_field(kappa2, {th, 0.0, branch}, grid).values());
      };
      if (regime == Regime::supercritical) {
        detail::consider(best, "extremal", d(0.0), 0.0);
      } else {
        const auto [th, dist] = detail::best_parameter(d, -pi, pi, 72);
        detail::consider(best, "extremal", dist, th);
      }
      if (regime == Regime::subcritical) break;  // branch has no effect below 3
    }
  }
  if ((families & family_degree_zero) && kappa2 > 0.0) {
    const double alpha = solve_alpha(kappa2);
    const auto d = [&](double b) {
      return max_node_distance(u, degree_zero_minimizer(kappa2, b, grid).field.values());
    };
    const auto [b, dist] = detail::best_parameter(d, 0.0, two_pi * alpha, 24);
    detail::consider(best, "degree_zero", dist, b);
  }
  return best;
}

/// Labels the middle ring; the distance is the worst ring's distance to that candidate.
inline FamilyMatch match_to_family(const CylinderField& field, double kappa2,
                                   unsigned families = family_all) {
  auto m = match_to_family(field.ring(field.z_count() / 2), kappa2, families);
  for (const auto& ring : field.rings()) {
    m.distance = std::max(m.distance, match_to_family(ring, kappa2, families).distance);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Multistart

/// Runs job(seed) for seeds 0..count-1 with at most `threads` concurrent runs;
/// results come back in seed order.
template <class Job>
auto run_seeds(std::size_t count, std::size_t threads, const Job& job)
    -> std::vector<decltype(job(std::uint64_t{}))> {
  using Result = decltype(job(std::uint64_t{}));
  std::vector<Result> results;
  results.reserve(count);
  threads = std::max<std::size_t>(1, threads);
  for (std::size_t start = 0; start < count; start += threads) {
    std::vector<std::future<Result>> batch;
    for (std::size_t s = start; s < std::min(count, start + threads); ++s) {
      batch.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async, job,
                                 static_cast<std::uint64_t>(s)));
    }
    for (auto& f : batch) results.push_back(f.get());
  }
  return results;
}

template <class Trace>
std::size_t best_trace(const std::vector<Trace>& traces) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < traces.size(); ++i) {
    if (traces[i].final_energy() < traces[best].final_energy()) best = i;
  }
  return best;
}

}  // namespace cylmin
