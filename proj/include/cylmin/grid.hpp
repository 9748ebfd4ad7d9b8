#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cylmin/errors.hpp"

namespace cylmin {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, two_pi);
  if (w <= -pi) w += two_pi;
  return w;
}

/**
 * Uniform periodic sampling of [-pi, pi): node i sits at -pi + 2*pi*i/N and
 * +pi is identified with node 0.
 *
 * Difference quotients on this grid divide by the chord length 2 sin(h/2)
 * instead of h. The stencil stays three-point and second order but becomes
 * exact on the first Fourier mode, so n, e3 and the axially symmetric family
 * are differentiated without discretization error.
 */
class PeriodicGrid {
 public:
  static constexpr std::size_t min_points = 8;

  explicit PeriodicGrid(std::size_t n_points) : n_(n_points) {
    if (n_points < min_points || n_points % 2 != 0) {
      throw std::invalid_argument("PeriodicGrid: node count must be even and >= 8, got " +
                                  std::to_string(n_points));
    }
    spacing_ = two_pi / static_cast<double>(n_);
    scale_ = 2.0 * std::sin(0.5 * spacing_);
    nodes_.resize(n_);
    normals_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      nodes_[i] = -pi + spacing_ * static_cast<double>(i);
      normals_[i] = Vec3(std::cos(nodes_[i]), std::sin(nodes_[i]), 0.0);
    }
  }

  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  double difference_scale() const { return scale_; }
  double node(std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }
  Vec3 tangent(std::size_t i) const { return Vec3(-normals_[i].y(), normals_[i].x(), 0.0); }

  std::size_t next(std::size_t i) const { return i + 1 == n_ ? 0 : i + 1; }
  std::size_t prev(std::size_t i) const { return i == 0 ? n_ - 1 : i - 1; }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) { return a.n_ == b.n_; }

 private:
  std::size_t n_;
  double spacing_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> nodes_;
  std::vector<Vec3> normals_;
};

inline PeriodicGrid make_grid(std::size_t n_points) { return PeriodicGrid(n_points); }

/// Moving frame of the unit circle at parameter t.
struct Frame {
  Vec3 normal;
  Vec3 tangent;
  Vec3 axis;
};

inline Frame frame_at(double t) {
  const double c = std::cos(t), s = std::sin(t);
  return {Vec3(c, s, 0.0), Vec3(-s, c, 0.0), Vec3(0.0, 0.0, 1.0)};
}

/// Rotation by t about e3; maps e1 to n(t) and e2 to tau(t).
inline Mat3 rotation(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

enum class ConstraintKind { unit_sphere, in_plane, unconstrained };

inline constexpr double unit_tolerance = 1e-12;

/// Samples of a 3-vector field on a PeriodicGrid. Unit-sphere and in-plane
/// kinds are checked node-wise at construction.
class VectorField {
 public:
  VectorField(PeriodicGrid grid, std::vector<Vec3> values,
              ConstraintKind kind = ConstraintKind::unit_sphere)
      : grid_(std::move(grid)), values_(std::move(values)), kind_(kind) {
    if (values_.size() != grid_.size()) {
      throw std::invalid_argument("VectorField: value count does not match grid");
    }
    if (kind_ == ConstraintKind::unconstrained) return;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (std::abs(values_[i].norm() - 1.0) > unit_tolerance) {
        throw std::invalid_argument("VectorField: value at node " + std::to_string(i) +
                                    " is not unit length");
      }
      if (kind_ == ConstraintKind::in_plane && std::abs(values_[i].z()) > unit_tolerance) {
        throw std::invalid_argument("VectorField: value at node " + std::to_string(i) +
                                    " leaves the plane");
      }
    }
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<Vec3>& values() const { return values_; }
  std::span<const Vec3> view() const { return values_; }
  const Vec3& operator[](std::size_t i) const { return values_[i]; }
  ConstraintKind kind() const { return kind_; }

  /// Largest |value . e3| over the nodes.
  double max_out_of_plane() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v.z()));
    return m;
  }

  /// Unit-sphere kind, or in-plane when every node lies in the plane.
  static VectorField classify(PeriodicGrid grid, std::vector<Vec3> values) {
    bool planar = true;
    for (const auto& v : values) planar = planar && std::abs(v.z()) <= unit_tolerance;
    return VectorField(std::move(grid), std::move(values),
                       planar ? ConstraintKind::in_plane : ConstraintKind::unit_sphere);
  }

 private:
  PeriodicGrid grid_;
  std::vector<Vec3> values_;
  ConstraintKind kind_;
};

/// Field on the cylinder [-1, 1] x S^1 stored ring by ring.
class CylinderField {
 public:
  CylinderField(std::vector<double> z_nodes, std::vector<VectorField> rings)
      : z_nodes_(std::move(z_nodes)), rings_(std::move(rings)) {
    if (rings_.empty() || rings_.size() != z_nodes_.size()) {
      throw std::invalid_argument("CylinderField: need one ring per z node");
    }
    for (const auto& r : rings_) {
      if (!(r.grid() == rings_.front().grid())) {
        throw std::invalid_argument("CylinderField: rings must share one angular grid");
      }
    }
  }

  /// Uniform z nodes on [-1, 1].
  static std::vector<double> uniform_z(std::size_t z_count) {
    if (z_count < 2) throw std::invalid_argument("CylinderField: need at least 2 z nodes");
    std::vector<double> z(z_count);
    for (std::size_t k = 0; k < z_count; ++k) {
      z[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(z_count - 1);
    }
    return z;
  }

  /// z-invariant extension of a ring field.
  static CylinderField extend(const VectorField& ring, std::size_t z_count) {
    return CylinderField(uniform_z(z_count), std::vector<VectorField>(z_count, ring));
  }

  const PeriodicGrid& grid() const { return rings_.front().grid(); }
  std::size_t z_count() const { return rings_.size(); }
  const std::vector<double>& z_nodes() const { return z_nodes_; }
  double z_spacing() const { return z_nodes_.size() > 1 ? z_nodes_[1] - z_nodes_[0] : 0.0; }
  const std::vector<VectorField>& rings() const { return rings_; }
  const VectorField& ring(std::size_t k) const { return rings_[k]; }

  /// Ring-major copy of all samples: index k * N + i.
  std::vector<Vec3> flatten() const {
    std::vector<Vec3> out;
    out.reserve(z_count() * grid().size());
    for (const auto& r : rings_) out.insert(out.end(), r.values().begin(), r.values().end());
    return out;
  }

  static CylinderField from_flat(const PeriodicGrid& grid, std::vector<double> z_nodes,
                                 std::span<const Vec3> flat,
                                 ConstraintKind kind = ConstraintKind::unit_sphere) {
    const std::size_t n = grid.size();
    if (flat.size() != n * z_nodes.size()) {
      throw std::invalid_argument("CylinderField: flat sample count mismatch");
    }
    std::vector<VectorField> rings;
    rings.reserve(z_nodes.size());
    for (std::size_t k = 0; k < z_nodes.size(); ++k) {
      rings.emplace_back(grid, std::vector<Vec3>(flat.begin() + k * n, flat.begin() + (k + 1) * n),
                         kind);
    }
    return CylinderField(std::move(z_nodes), std::move(rings));
  }

 private:
  std::vector<double> z_nodes_;
  std::vector<VectorField> rings_;
};

inline VectorField sample_normal_field(const PeriodicGrid& grid) {
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = frame_at(grid.node(i)).normal;
  return VectorField(grid, std::move(v), ConstraintKind::in_plane);
}

/// Axially symmetric field R(t) (sin theta, 0, cos theta).
inline VectorField sample_u_theta(const PeriodicGrid& grid, double theta) {
  const double s = std::sin(theta), c = std::cos(theta);
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    v[i] = Vec3(s * std::cos(t), s * std::sin(t), c);
  }
  return VectorField::classify(grid, std::move(v));
}

inline VectorField constant_field(const PeriodicGrid& grid, const Vec3& value) {
  return VectorField::classify(grid, std::vector<Vec3>(grid.size(), value));
}

/// Components of a field in the moving frame (tau, n, e3).
struct FrameComponents {
  std::vector<double> m1;
  std::vector<double> m2;
  std::vector<double> m3;
};

inline FrameComponents frame_decompose(const VectorField& field) {
  const auto& grid = field.grid();
  FrameComponents out;
  out.m1.resize(grid.size());
  out.m2.resize(grid.size());
  out.m3.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Frame f = frame_at(grid.node(i));
    out.m1[i] = field[i].dot(f.tangent);
    out.m2[i] = field[i].dot(f.normal);
    out.m3[i] = field[i].dot(f.axis);
  }
  return out;
}

inline std::vector<Vec3> frame_compose(const PeriodicGrid& grid, const FrameComponents& c) {
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Frame f = frame_at(grid.node(i));
    v[i] = c.m1[i] * f.tangent + c.m2[i] * f.normal + c.m3[i] * f.axis;
  }
  return v;
}

/// Adjacent-node angular jumps at or above this are treated as ambiguous.
inline constexpr double winding_jump_limit = pi - 1e-6;

namespace detail {

// Wrapped increments of the in-plane angle atan2(y, x) from node i to node i+1.
inline std::vector<double> planar_increments(const VectorField& field) {
  if (field.max_out_of_plane() > unit_tolerance) {
    throw std::invalid_argument("winding: field is not in-plane");
  }
  const auto& grid = field.grid();
  const std::size_t n = grid.size();
  std::vector<double> inc(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = field[i];
    const Vec3& b = field[grid.next(i)];
    const double d = wrap_angle(std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x()));
    if (std::abs(d) >= winding_jump_limit) {
      throw UnresolvedWinding("winding: angular jump of " + std::to_string(d) + " rad after node " +
                              std::to_string(i) + "; refine the grid");
    }
    inc[i] = d;
  }
  return inc;
}

}  // namespace detail

/// Number of turns of an in-plane field around e3.
inline int winding_degree(const VectorField& field) {
  double total = 0.0;
  for (double d : detail::planar_increments(field)) total += d;
  return static_cast<int>(std::lround(total / two_pi));
}

/**
 * Continuous lift theta of an in-plane field, with m1 = sin theta and
 * m2 = cos theta in the moving frame. theta(pi) - theta(-pi) = 2 pi j, and
 * the winding degree of the field equals j + 1.
 */
struct AngleProfile {
  PeriodicGrid grid;
  std::vector<double> theta;
  int j = 0;

  /// Value at t = +pi, i.e. node 0 shifted by one period.
  double theta_end() const { return theta.front() + two_pi * j; }

  /// In-plane field sin(theta) tau + cos(theta) n.
  VectorField reconstruct() const {
    std::vector<Vec3> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Frame f = frame_at(grid.node(i));
      v[i] = std::sin(theta[i]) * f.tangent + std::cos(theta[i]) * f.normal;
    }
    return VectorField(grid, std::move(v), ConstraintKind::in_plane);
  }
};

inline AngleProfile lift_angle(const VectorField& field) {
  const auto inc = detail::planar_increments(field);
  const auto& grid = field.grid();
  const std::size_t n = grid.size();
  const Frame f0 = frame_at(grid.node(0));
  AngleProfile out{grid, std::vector<double>(n), 0};
  // theta = (planar angle) - t, so each step is the planar increment minus h.
  out.theta[0] = std::atan2(field[0].dot(f0.tangent), field[0].dot(f0.normal));
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out.theta[i + 1] = out.theta[i] + inc[i] - grid.spacing();
    total += inc[i];
  }
  total += inc[n - 1];
  out.j = static_cast<int>(std::lround(total / two_pi)) - 1;
  return out;
}

}  // namespace cylmin
