#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylmin/elliptic.hpp"
#include "cylmin/energy.hpp"
#include "cylmin/grid.hpp"
#include "cylmin/minimize.hpp"
#include "cylmin/relax.hpp"

namespace cylmin::io {

/// 17 significant digits: enough to round-trip any double.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::vector<double> parse_row(const std::string& line, std::size_t columns, std::size_t row) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw std::invalid_argument("csv: bad number '" + cell + "' on row " + std::to_string(row));
    }
  }
  if (out.size() != columns) {
    throw std::invalid_argument("csv: expected " + std::to_string(columns) + " columns on row " +
                                std::to_string(row));
  }
  return out;
}

inline void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::invalid_argument("csv: expected header '" + header + "'");
}

}  // namespace detail

/// Header `t,x,y,z`, one row per node.
inline void write_field_csv(std::ostream& out, const VectorField& field) {
  out << "t,x,y,z\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec3& v = field[i];
    out << fmt(field.grid().node(i)) << ',' << fmt(v.x()) << ',' << fmt(v.y()) << ',' << fmt(v.z())
        << '\n';
  }
}

inline VectorField read_field_csv(std::istream& in,
                                  ConstraintKind kind = ConstraintKind::unit_sphere) {
  detail::expect_header(in, "t,x,y,z");
  std::vector<double> ts;
  std::vector<Vec3> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::parse_row(line, 4, values.size() + 1);
    ts.push_back(row[0]);
    values.emplace_back(row[1], row[2], row[3]);
  }
  PeriodicGrid grid(values.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::abs(ts[i] - grid.node(i)) > 1e-12) {
      throw std::invalid_argument("csv: t column does not match a uniform periodic grid");
    }
  }
  if (kind == ConstraintKind::unit_sphere) return VectorField::classify(grid, std::move(values));
  return VectorField(grid, std::move(values), kind);
}

/// Header `z,t,x,y,z_comp`, ring-major.
inline void write_cylinder_csv(std::ostream& out, const CylinderField& field) {
  out << "z,t,x,y,z_comp\n";
  for (std::size_t k = 0; k < field.z_count(); ++k) {
    const auto& ring = field.ring(k);
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec3& v = ring[i];
      out << fmt(field.z_nodes()[k]) << ',' << fmt(ring.grid().node(i)) << ',' << fmt(v.x()) << ','
          << fmt(v.y()) << ',' << fmt(v.z()) << '\n';
    }
  }
}

inline CylinderField read_cylinder_csv(std::istream& in) {
  detail::expect_header(in, "z,t,x,y,z_comp");
  std::vector<double> zs;
  std::vector<std::vector<Vec3>> rings;
  std::string line;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::parse_row(line, 5, ++row_no);
    if (zs.empty() || row[0] != zs.back()) {
      zs.push_back(row[0]);
      rings.emplace_back();
    }
    rings.back().emplace_back(row[2], row[3], row[4]);
  }
  if (rings.empty()) throw std::invalid_argument("csv: no rows");
  PeriodicGrid grid(rings.front().size());
  std::vector<VectorField> fields;
  for (auto& r : rings) fields.push_back(VectorField::classify(grid, std::move(r)));
  return CylinderField(std::move(zs), std::move(fields));
}

inline nlohmann::json to_json(const EnergyReport& r) {
  nlohmann::json j{{"kappa2", r.kappa2},
                   {"dirichlet", r.dirichlet},
                   {"anisotropy", r.anisotropy},
                   {"total", r.total}};
  if (r.degenerate) j["warning"] = "kappa2 = 0: every constant field is a minimizer";
  return j;
}

inline nlohmann::json to_json(const PoincareResult& r) {
  return {{"kappa2", r.kappa2},
          {"omega2", r.omega2},
          {"c2_closed", r.c2_closed},
          {"c2_numeric", r.c2_numeric},
          {"abs_difference", std::abs(r.c2_numeric - r.c2_closed)},
          {"phi_kappa", r.phi_kappa},
          {"regime", to_string(r.regime)}};
}

template <class Field>
nlohmann::json trace_json(const DescentTrace<Field>& trace, double kappa2, Constraint constraint,
                          const std::string& label) {
  return {{"kappa2", kappa2},
          {"constraint", to_string(constraint)},
          {"iterations", trace.iterations},
          {"energies", trace.energies},
          {"final_label", label},
          {"final_energy", trace.final_energy()}};
}

inline void write_poincare_header(std::ostream& out) {
  out << "kappa2,c2_closed,c2_numeric,abs_difference,phi_kappa,regime\n";
}

inline void write_poincare_row(std::ostream& out, const PoincareResult& r) {
  out << fmt(r.kappa2) << ',' << fmt(r.c2_closed) << ',' << fmt(r.c2_numeric) << ','
      << fmt(std::abs(r.c2_numeric - r.c2_closed)) << ',' << fmt(r.phi_kappa) << ','
      << to_string(r.regime) << '\n';
}

inline void write_elliptic_header(std::ostream& out) {
  out << "kappa2,alpha,E_complete,energy_deg0,energy_deg1\n";
}

/// energy_deg1 is the value 2 pi of the normal fields.
inline void write_elliptic_row(std::ostream& out, const EllipticSolution& s) {
  out << fmt(s.kappa2) << ',' << fmt(s.alpha) << ',' << fmt(s.E_complete) << ','
      << fmt(s.energy_deg0) << ',' << fmt(two_pi) << '\n';
}

}  // namespace cylmin::io
