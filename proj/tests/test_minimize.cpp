#include <gtest/gtest.h>

#include <cmath>

#include "cylmin/minimize.hpp"
#include "test_support.hpp"

using namespace cylmin;

namespace {

DescentOptions options(Constraint c = Constraint::none, std::uint64_t seed = 0) {
  DescentOptions o;
  o.constraint = c;
  o.seed = seed;
  return o;
}

bool non_increasing(const std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i] > e[i - 1]) return false;
  }
  return true;
}

}  // namespace

TEST(DescentOptions, Validation) {
  DescentOptions o;
  EXPECT_NO_THROW(o.validate());
  o.step = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o.step = 0.1;
  o.grad_tol = -1.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Constraint, ParseAndPrint) {
  for (auto c : {Constraint::none, Constraint::in_plane, Constraint::weakly_axially_symmetric}) {
    EXPECT_EQ(parse_constraint(to_string(c)), c);
  }
  EXPECT_THROW(parse_constraint("sphere"), std::invalid_argument);
}

TEST(DescendCircle, StationaryStartDoesNotMove) {
  const auto g = make_grid(128);
  const auto n = sample_normal_field(g);
  for (double k2 : {0.5, 4.0}) {
    const auto t = descend_circle(n, EnergyParams(k2), options());
    EXPECT_EQ(t.iterations, 0u);
    EXPECT_TRUE(t.converged);
    EXPECT_LT(t.gradient_norm, 1e-6);
    EXPECT_EQ(t.energies.size(), 1u);
  }
}

TEST(DescendCircle, RejectsPlanarConstraintOnNonPlanarStart) {
  const auto g = make_grid(16);
  EXPECT_THROW(descend_circle(sample_u_theta(g, 0.3), EnergyParams(1.0), options(Constraint::in_plane)),
               std::invalid_argument);
}

TEST(DescendCircle, RandomStartsReachTheNormalAboveOne) {
  const auto g = make_grid(128);
  const auto traces = run_seeds(8, 1, [&](std::uint64_t seed) {
    return descend_circle(random_start_field(g, seed), EnergyParams(4.0), options(Constraint::none, seed));
  });
  for (const auto& t : traces) EXPECT_TRUE(non_increasing(t.energies));
  const auto& best = traces[best_trace(traces)];
  EXPECT_NEAR(best.final_energy(), two_pi, 1e-3);
  const auto m = match_to_family(best.final_field, 4.0);
  EXPECT_TRUE(m.label == "normal+" || m.label == "normal-") << m.label;
  EXPECT_LT(m.distance, 0.05);
}

TEST(DescendCircle, InPlaneDescentReachesDegreeResolvedMinimum) {
  const auto g = make_grid(128);
  const double k2 = 1.0;
  const double deg0 = solve_elliptic(k2).energy_deg0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    auto shape = cylmin::testing::random_smooth_planar(rng);
    shape.degree = static_cast<int>(seed % 2);  // degree 0 or 1
    const auto t = descend_circle(shape.sample(g), EnergyParams(k2), options(Constraint::in_plane, seed));
    const int deg = winding_degree(t.final_field);
    EXPECT_EQ(deg, shape.degree);
    EXPECT_NEAR(t.final_energy(), deg == 1 ? two_pi : deg0, 1e-3);
  }
}

TEST(DescendCircle, InPlaneStaysInPlane) {
  const auto g = make_grid(64);
  auto o = options(Constraint::in_plane);
  o.max_iters = 500;
  o.grad_tol = 1e-300;
  o.energy_tol = 1e-300;
  double worst = 0.0;
  std::size_t calls = 0;
  const auto t = descend_circle(random_in_plane_field(g, 5), EnergyParams(2.0), o,
                                [&](std::size_t, std::span<const Vec3> u) {
                                  ++calls;
                                  for (const auto& v : u) worst = std::max(worst, std::abs(v.z()));
                                });
  EXPECT_EQ(calls, t.iterations);
  EXPECT_GT(t.iterations, 100u);
  EXPECT_LT(worst, 1e-12);
  EXPECT_EQ(t.final_field.kind(), ConstraintKind::in_plane);
}

TEST(DescendCircle, AxialSymmetryIsPreserved) {
  const auto g = make_grid(64);
  auto o = options();
  o.max_iters = 500;
  const Vec3 profile = Vec3(0.5, 0.4, 0.77).normalized();
  std::vector<Vec3> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = rotation(g.node(i)) * profile;
  double worst = 0.0;
  const auto t = descend_circle(VectorField(g, v), EnergyParams(2.0), o,
                                [&](std::size_t, std::span<const Vec3> u) {
                                  worst = std::max(worst, axial_symmetry_defect(g, u));
                                });
  EXPECT_GT(t.iterations, 10u);
  EXPECT_LT(std::abs(t.final_energy() - two_pi), 1e-6);
  EXPECT_LT(worst, 1e-9);
}

TEST(DescendCylinder, AxialSymmetryIsPreserved) {
  const auto g = make_grid(32);
  const std::size_t zc = 9;
  std::vector<VectorField> rings;
  const auto zs = CylinderField::uniform_z(zc);
  for (double z : zs) rings.push_back(sample_u_theta(g, 0.8 + 0.4 * z));
  auto o = options();
  o.max_iters = 300;
  double worst = 0.0;
  const auto t = descend_cylinder(CylinderField(zs, rings), EnergyParams(0.5), o,
                                  [&](std::size_t, std::span<const Vec3> m) {
                                    worst = std::max(worst, axial_symmetry_defect(g, m));
                                  });
  EXPECT_GT(t.iterations, 10u);
  EXPECT_LT(worst, 1e-9);
}

TEST(DescendCylinder, WasConstraintFindsAxisAlignedStateBelowOne) {
  const auto g = make_grid(32);
  const auto t = descend_cylinder(random_was_field(g, 9, 1), EnergyParams(0.5),
                                  options(Constraint::weakly_axially_symmetric));
  EXPECT_TRUE(non_increasing(t.energies));
  EXPECT_NEAR(t.final_energy(), two_pi, 1e-2);
  EXPECT_LT(max_ring_average(t.final_field), was_tolerance);
  const auto m = match_to_family(t.final_field, 0.5);
  EXPECT_TRUE(m.label == "e3+" || m.label == "e3-") << m.label;
}

TEST(DescendCylinder, WasConstraintFindsNormalAboveOne) {
  const auto g = make_grid(32);
  const auto t = descend_cylinder(random_was_field(g, 9, 2), EnergyParams(2.0),
                                  options(Constraint::weakly_axially_symmetric));
  EXPECT_NEAR(t.final_energy(), 4 * pi, 1e-2);
  const auto m = match_to_family(t.final_field, 2.0);
  EXPECT_TRUE(m.label == "normal+" || m.label == "normal-") << m.label;
}

TEST(DescendCylinder, MinimizersAreZInvariant) {
  const auto g = make_grid(32);
  for (double k2 : {0.5, 4.0}) {
    const auto t = descend_cylinder(random_cylinder_field(g, 9, 3), EnergyParams(k2), options());
    EXPECT_LT(axial_derivative_norm(t.final_field), 1e-2) << k2;
  }
}

TEST(RandomWasField, RingAveragesVanish) {
  const auto f = random_was_field(make_grid(32), 5, 7);
  EXPECT_LT(max_ring_average(f), was_tolerance);
  EXPECT_GT(max_ring_average(random_cylinder_field(make_grid(32), 5, 7)), 1e-3);
}

TEST(DescendTheta, DegreeZeroMatchesEllipticFamily) {
  const auto g = make_grid(256);
  AngleProfile init{g, std::vector<double>(g.size()), -1};
  for (std::size_t i = 0; i < g.size(); ++i) init.theta[i] = -g.node(i);
  const auto t = descend_theta(init, EnergyParams(1.0), options());
  EXPECT_TRUE(t.converged);
  EXPECT_TRUE(non_increasing(t.energies));
  EXPECT_EQ(t.final_field.j, -1);
  EXPECT_NEAR(t.final_energy(), solve_elliptic(1.0).energy_deg0, 1e-4);
}

TEST(DescendTheta, DegreeOneRelaxesToNormal) {
  const auto g = make_grid(128);
  AngleProfile init{g, std::vector<double>(g.size()), 0};
  for (std::size_t i = 0; i < g.size(); ++i) init.theta[i] = 0.3 * std::sin(g.node(i));
  const auto t = descend_theta(init, EnergyParams(2.0), options());
  EXPECT_NEAR(t.final_energy(), two_pi, 1e-8);
  for (double th : t.final_field.theta) EXPECT_NEAR(th, 0.0, 1e-4);
}

TEST(DescendTheta, DegreeMinusOneNeverWins) {
  const auto g = make_grid(128);
  AngleProfile init{g, std::vector<double>(g.size()), -2};
  for (std::size_t i = 0; i < g.size(); ++i) init.theta[i] = -2.0 * g.node(i);
  const auto t = descend_theta(init, EnergyParams(1.0), options());
  EXPECT_EQ(t.final_field.j, -2);
  EXPECT_GT(t.final_energy(), two_pi);
}

TEST(LiftedEnergy, AgreesWithFieldEnergyAtStationaryProfiles) {
  const auto g = make_grid(64);
  AngleProfile flat{g, std::vector<double>(g.size(), 0.0), 0};
  EXPECT_NEAR(lifted_energy(flat, 3.0), two_pi, 1e-12);
  AngleProfile half{g, std::vector<double>(g.size(), pi / 2), 0};
  EXPECT_NEAR(lifted_energy(half, 3.0), two_pi + two_pi * 3.0, 1e-12);
}

TEST(MatchToFamily, Examples) {
  const auto g = make_grid(64);
  const auto n = match_to_family(sample_normal_field(g), 2.0);
  EXPECT_EQ(n.label, "normal+");
  EXPECT_LT(n.distance, 1e-12);

  const auto u = match_to_family(sample_u_theta(g, pi / 3), 2.0);
  EXPECT_EQ(u.label, "u_theta");
  EXPECT_NEAR(u.parameter, pi / 3, 1e-6);

  EXPECT_EQ(match_to_family(constant_field(g, -Vec3::UnitZ()), 0.5).label, "e3-");

  const auto d = match_to_family(degree_zero_minimizer(1.0, 0.9, g).field, 1.0);
  EXPECT_EQ(d.label, "degree_zero");
  EXPECT_LT(d.distance, 1e-6);

  const auto sub = extremal_field(1.0, {0.4, 0.0}, g);
  std::vector<Vec3> unit(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) unit[i] = sub[i];
  EXPECT_EQ(match_to_family(VectorField(g, unit, ConstraintKind::unconstrained), 1.0).label,
            "extremal");
}

TEST(MatchToFamily, CylinderUsesWorstRing) {
  const auto g = make_grid(32);
  const auto c = CylinderField::extend(sample_normal_field(g), 5);
  const auto m = match_to_family(c, 2.0);
  EXPECT_EQ(m.label, "normal+");
  EXPECT_LT(m.distance, 1e-12);
}

TEST(RunSeeds, DeterministicAndOrdered) {
  const auto job = [](std::uint64_t seed) { return seed * seed; };
  const auto a = run_seeds(7, 1, job);
  const auto b = run_seeds(7, 3, job);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], i * i);

  const auto g = make_grid(32);
  const auto descend = [&](std::uint64_t s) {
    return descend_circle(random_unit_field(g, s), EnergyParams(1.5), options()).final_energy();
  };
  EXPECT_EQ(run_seeds(3, 1, descend), run_seeds(3, 2, descend));
}
