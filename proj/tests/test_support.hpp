#pragma once

// Generators and independent oracles shared by the test binaries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "cylmin/grid.hpp"

namespace cylmin::testing {

/// Smooth in-plane field with planar angle degree * t + a random trigonometric
/// perturbation of degree 3; samples are resolvable on any grid with N >= 32.
struct SmoothPlanar {
  int degree = 0;
  double offset = 0.0;
  double a[3] = {0, 0, 0};
  double b[3] = {0, 0, 0};

  double angle(double t) const {
    double phi = offset + degree * t;
    for (int k = 0; k < 3; ++k) phi += a[k] * std::cos((k + 1) * t) + b[k] * std::sin((k + 1) * t);
    return phi;
  }

  VectorField sample(const PeriodicGrid& grid) const {
    std::vector<Vec3> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double phi = angle(grid.node(i));
      v[i] = Vec3(std::cos(phi), std::sin(phi), 0.0);
    }
    return VectorField(grid, std::move(v), ConstraintKind::in_plane);
  }
};

inline SmoothPlanar random_smooth_planar(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> deg(-3, 3);
  std::uniform_real_distribution<double> amp(-0.4, 0.4), off(-pi, pi);
  SmoothPlanar s;
  s.degree = deg(rng);
  s.offset = off(rng);
  for (int k = 0; k < 3; ++k) {
    s.a[k] = amp(rng);
    s.b[k] = amp(rng);
  }
  return s;
}

/// Random unit vectors orthogonal to u, node-wise.
inline std::vector<Vec3> random_tangent(const std::vector<Vec3>& u, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> phi(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    Vec3 x(normal(rng), normal(rng), normal(rng));
    phi[i] = x - x.dot(u[i]) * u[i];
  }
  return phi;
}

/// Spectral derivative of periodic samples by a direct DFT (O(N^2)); exact for
/// trigonometric polynomials of degree < N/2.
inline std::vector<double> spectral_derivative(const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<std::complex<double>> c(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += f[j] * std::polar(1.0, -two_pi * double(k * j) / double(n));
    c[k] = s / double(n);
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const long kk = k <= n / 2 ? long(k) : long(k) - long(n);
      if (2 * k == n) continue;  // drop the Nyquist mode
      s += std::complex<double>(0.0, double(kk)) * c[k] * std::polar(1.0, two_pi * double(k * j) / double(n));
    }
    out[j] = s.real();
  }
  return out;
}

/// Relaxed-energy Rayleigh quotient with spectral derivatives. Samples sit at
/// t_j = -pi + 2 pi j / N; the phase shift does not affect derivatives.
inline double spectral_rayleigh(const PeriodicGrid& grid, const std::vector<Vec3>& u, double kappa2) {
  double dir = 0.0, an = 0.0, mass = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> comp(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) comp[i] = u[i](c);
    for (double d : spectral_derivative(comp)) dir += d * d;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    an += u[i].cross(grid.normal(i)).squaredNorm();
    mass += u[i].squaredNorm();
  }
  return (dir + kappa2 * an) / mass;
}

}  // namespace cylmin::testing
