#include <gtest/gtest.h>

#include <sstream>

#include "cylmin/io.hpp"

using namespace cylmin;

TEST(Csv, FieldRoundTripReproducesEnergy) {
  const auto g = make_grid(128);
  const auto f = random_unit_field(g, 42);
  std::stringstream ss;
  io::write_field_csv(ss, f);
  const auto back = io::read_field_csv(ss);
  ASSERT_EQ(back.size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back[i], f[i]);
  const double e0 = circle_energy(f, EnergyParams(1.7)).total;
  EXPECT_NEAR(circle_energy(back, EnergyParams(1.7)).total, e0, 1e-12 * e0);
}

TEST(Csv, PlanarFieldsAreClassified) {
  std::stringstream ss;
  io::write_field_csv(ss, sample_normal_field(make_grid(16)));
  EXPECT_EQ(io::read_field_csv(ss).kind(), ConstraintKind::in_plane);
}

TEST(Csv, CylinderRoundTrip) {
  const auto g = make_grid(32);
  const auto c = random_cylinder_field(g, 5, 3);
  std::stringstream ss;
  io::write_cylinder_csv(ss, c);
  const auto back = io::read_cylinder_csv(ss);
  ASSERT_EQ(back.z_count(), 5u);
  const double e0 = cylinder_energy(c, EnergyParams(0.8)).total;
  EXPECT_NEAR(cylinder_energy(back, EnergyParams(0.8)).total, e0, 1e-12 * e0);
}

TEST(Csv, MalformedInput) {
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(io::read_field_csv(bad_header), std::invalid_argument);
  std::stringstream bad_cell("t,x,y,z\n0,1,zero,0\n");
  EXPECT_THROW(io::read_field_csv(bad_cell), std::invalid_argument);
  std::stringstream short_row("t,x,y,z\n0,1,0\n");
  EXPECT_THROW(io::read_field_csv(short_row), std::invalid_argument);
  std::stringstream empty("");
  EXPECT_THROW(io::read_field_csv(empty), std::invalid_argument);
}

TEST(Json, EnergyReportWarnsWhenDegenerate) {
  const auto g = make_grid(16);
  const auto j0 = io::to_json(circle_energy(sample_normal_field(g), EnergyParams(0.0)));
  EXPECT_TRUE(j0.contains("warning"));
  const auto j1 = io::to_json(circle_energy(sample_normal_field(g), EnergyParams(1.0)));
  EXPECT_FALSE(j1.contains("warning"));
  EXPECT_NEAR(j1["total"].get<double>(), two_pi, 1e-12);
}

TEST(Json, TraceKeys) {
  const auto g = make_grid(32);
  const auto t = descend_circle(random_unit_field(g, 1), EnergyParams(4.0), DescentOptions{});
  const auto j = io::trace_json(t, 4.0, Constraint::none, "normal+");
  for (const char* key : {"kappa2", "constraint", "iterations", "energies", "final_label", "final_energy"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["energies"].size(), t.energies.size());
  EXPECT_EQ(j["constraint"], "none");
}

TEST(Csv, PoincareAndEllipticRows) {
  std::stringstream ss;
  io::write_poincare_header(ss);
  io::write_poincare_row(ss, closed_form_constant(4.0));
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  EXPECT_EQ(header, "kappa2,c2_closed,c2_numeric,abs_difference,phi_kappa,regime");
  EXPECT_EQ(row.substr(0, 4), "4,1,");
  EXPECT_NE(row.find("supercritical"), std::string::npos);

  std::stringstream es;
  io::write_elliptic_header(es);
  io::write_elliptic_row(es, solve_elliptic(1.0));
  std::getline(es, header);
  EXPECT_EQ(header, "kappa2,alpha,E_complete,energy_deg0,energy_deg1");
}

TEST(Format, RoundTripsDoubles) {
  for (double x : {pi, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(io::fmt(x)), x);
}
