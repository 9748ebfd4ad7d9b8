// cylmin: reports, sweeps and descent runs for the anisotropic cylinder energy.
//
//   cylmin poincare --kappa2 1 --grid-n 512
//   cylmin sweep --kappa2-min 0.1 --kappa2-max 6 --steps 60
//   cylmin threshold --tol 1e-10
//   cylmin elliptic --kappa2 1
//   cylmin minimize --kappa2 4 --seeds 8 --out field.csv
//   cylmin phase-portrait --kappa2 1.5
//
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cylmin/cylmin.hpp"

using namespace cylmin;
using nlohmann::json;

namespace {

constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

struct RunConfig {
  std::string command;
  std::optional<double> kappa2;
  std::optional<double> kappa2_min;
  std::optional<double> kappa2_max;
  std::size_t steps = 0;
  std::size_t grid_n = 512;
  std::size_t z_n = 65;
  std::size_t seeds = 8;
  std::string constraint = "none";
  std::optional<int> degree;
  bool cylinder = false;
  std::string out_path;
  std::string format = "csv";
  std::optional<double> tol;
};

std::size_t thread_count() {
  if (const char* env = std::getenv("CYLMIN_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("CYLMIN_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double require_kappa2(const RunConfig& c) {
  if (!c.kappa2) throw std::invalid_argument("--kappa2 is required");
  if (!(*c.kappa2 > 0.0) || !std::isfinite(*c.kappa2)) {
    throw std::invalid_argument("--kappa2 must be finite and > 0");
  }
  return *c.kappa2;
}

std::vector<double> kappa2_values(const RunConfig& c, bool allow_single) {
  if (c.kappa2_min || c.kappa2_max) {
    if (!c.kappa2_min || !c.kappa2_max) {
      throw std::invalid_argument("--kappa2-min and --kappa2-max go together");
    }
    const double lo = *c.kappa2_min, hi = *c.kappa2_max;
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
      throw std::invalid_argument("need 0 < kappa2-min < kappa2-max");
    }
    if (c.steps < 2) throw std::invalid_argument("--steps must be >= 2");
    std::vector<double> out(c.steps);
    for (std::size_t i = 0; i < c.steps; ++i) {
      out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(c.steps - 1);
    }
    return out;
  }
  if (allow_single && c.kappa2) return {require_kappa2(c)};
  throw std::invalid_argument(allow_single ? "give --kappa2 or a --kappa2-min/--kappa2-max range"
                                           : "give --kappa2-min, --kappa2-max and --steps");
}

// Opens --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_poincare(const RunConfig& c) {
  const auto ks = kappa2_values(c, true);
  const auto grid = make_grid(c.grid_n);
  const auto rows = run_seeds(ks.size(), thread_count(),
                              [&](std::uint64_t i) { return poincare_constant(ks[i], grid); });
  Output out(c.out_path);
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(io::to_json(r));
    out.stream() << (rows.size() == 1 ? arr[0] : arr).dump(2) << '\n';
  } else {
    io::write_poincare_header(out.stream());
    for (const auto& r : rows) io::write_poincare_row(out.stream(), r);
  }
  return 0;
}

struct SweepRow {
  double kappa2 = 0.0;
  double c2 = 0.0;
  double energy_normal = two_pi;
  double energy_axisym = 0.0;
  double energy_deg0 = 0.0;
  double energy_inplane = 0.0;
};

int cmd_sweep(const RunConfig& c) {
  const auto ks = kappa2_values(c, false);
  const auto rows = run_seeds(ks.size(), thread_count(), [&](std::uint64_t i) {
    SweepRow r;
    r.kappa2 = ks[i];
    r.c2 = closed_form_constant(r.kappa2).c2_closed;
    r.energy_axisym = r.kappa2 <= 1.0 ? two_pi * r.kappa2 : two_pi;
    r.energy_deg0 = solve_elliptic(r.kappa2).energy_deg0;
    r.energy_inplane = std::min(r.energy_deg0, r.energy_normal);
    return r;
  });
  Output out(c.out_path);
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"kappa2", r.kappa2},
                     {"c2", r.c2},
                     {"energy_normal", r.energy_normal},
                     {"energy_axisym", r.energy_axisym},
                     {"energy_deg0", r.energy_deg0},
                     {"energy_inplane_min", r.energy_inplane}});
    }
    out.stream() << arr.dump(2) << '\n';
  } else {
    out.stream() << "kappa2,c2,energy_normal,energy_axisym,energy_deg0,energy_inplane_min\n";
    for (const auto& r : rows) {
      out.stream() << io::fmt(r.kappa2) << ',' << io::fmt(r.c2) << ',' << io::fmt(r.energy_normal)
                   << ',' << io::fmt(r.energy_axisym) << ',' << io::fmt(r.energy_deg0) << ','
                   << io::fmt(r.energy_inplane) << '\n';
    }
  }
  return 0;
}

int cmd_threshold(const RunConfig& c) {
  const auto t = solve_threshold();
  if (c.tol) {
    if (!(*c.tol > 0.0)) throw std::invalid_argument("--tol must be > 0");
    if (std::abs(t.residual) >= *c.tol) {
      throw NumericalFailure("threshold residual " + io::fmt(t.residual) + " above --tol");
    }
  }
  Output out(c.out_path);
  if (c.format == "json") {
    out.stream() << json{{"kappa2_star", t.kappa2}, {"residual", t.residual}}.dump(2) << '\n';
  } else {
    out.stream() << "kappa2_star,residual\n" << io::fmt(t.kappa2) << ',' << io::fmt(t.residual) << '\n';
  }
  return 0;
}

int cmd_elliptic(const RunConfig& c) {
  const auto ks = kappa2_values(c, true);
  const auto rows =
      run_seeds(ks.size(), thread_count(), [&](std::uint64_t i) { return solve_elliptic(ks[i]); });
  Output out(c.out_path);
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& s : rows) {
      arr.push_back({{"kappa2", s.kappa2},
                     {"alpha", s.alpha},
                     {"E_complete", s.E_complete},
                     {"F_period", s.F_period},
                     {"energy_deg0", s.energy_deg0},
                     {"energy_deg1", two_pi}});
    }
    out.stream() << (rows.size() == 1 ? arr[0] : arr).dump(2) << '\n';
  } else {
    io::write_elliptic_header(out.stream());
    for (const auto& s : rows) io::write_elliptic_row(out.stream(), s);
  }
  return 0;
}

// In-plane start of the given degree: angle d t + offset + a small random
// trigonometric perturbation.
VectorField planar_start(const PeriodicGrid& grid, int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.3, 0.3), off(-pi, pi);
  const double offset = off(rng), a1 = amp(rng), b1 = amp(rng), a2 = amp(rng), b2 = amp(rng);
  std::vector<Vec3> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    const double phi = offset + degree * t + a1 * std::cos(t) + b1 * std::sin(t) +
                       a2 * std::cos(2 * t) + b2 * std::sin(2 * t);
    v[i] = Vec3(std::cos(phi), std::sin(phi), 0.0);
  }
  return VectorField(grid, std::move(v), ConstraintKind::in_plane);
}

VectorField circle_start(const PeriodicGrid& grid, Constraint constraint,
                         const std::optional<int>& degree, std::uint64_t seed) {
  if (degree) return planar_start(grid, *degree, seed);
  if (constraint == Constraint::in_plane) return random_in_plane_field(grid, seed);
  return random_start_field(grid, seed);
}

CylinderField cylinder_start(const PeriodicGrid& grid, std::size_t z_n, Constraint constraint,
                             const std::optional<int>& degree, std::uint64_t seed) {
  if (constraint == Constraint::weakly_axially_symmetric) return random_was_field(grid, z_n, seed);
  if (constraint == Constraint::none && !degree) return random_start_cylinder(grid, z_n, seed);
  std::vector<VectorField> rings;
  for (std::size_t k = 0; k < z_n; ++k) {
    rings.push_back(circle_start(grid, constraint, degree, seed * 1000003u + k));
  }
  return CylinderField(CylinderField::uniform_z(z_n), std::move(rings));
}

template <class Field>
json seed_summary(const std::vector<DescentTrace<Field>>& traces) {
  json arr = json::array();
  for (std::size_t s = 0; s < traces.size(); ++s) {
    arr.push_back({{"seed", s},
                   {"iterations", traces[s].iterations},
                   {"converged", traces[s].converged},
                   {"final_energy", traces[s].final_energy()}});
  }
  return arr;
}

template <class Field>
void write_seed_csv(std::ostream& out, const std::vector<DescentTrace<Field>>& traces, std::size_t best) {
  out << "seed,iterations,converged,final_energy,best\n";
  for (std::size_t s = 0; s < traces.size(); ++s) {
    out << s << ',' << traces[s].iterations << ',' << (traces[s].converged ? 1 : 0) << ','
        << io::fmt(traces[s].final_energy()) << ',' << (s == best ? 1 : 0) << '\n';
  }
}

int cmd_minimize(const RunConfig& c) {
  const double k2 = require_kappa2(c);
  const Constraint constraint = parse_constraint(c.constraint);
  if (c.degree && constraint != Constraint::in_plane) {
    throw std::invalid_argument("--degree needs --constraint in-plane");
  }
  if (constraint == Constraint::weakly_axially_symmetric && !c.cylinder) {
    throw std::invalid_argument("--constraint was needs --cylinder");
  }
  if (c.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  const auto grid = make_grid(c.grid_n);
  const EnergyParams params(k2);
  DescentOptions base;
  base.constraint = constraint;
  if (c.tol) base.grad_tol = *c.tol;
  base.validate();
  const auto opts_for = [&](std::uint64_t seed) {
    DescentOptions o = base;
    o.seed = seed;
    return o;
  };

  json report;
  if (c.cylinder) {
    if (c.z_n < 3) throw std::invalid_argument("--z-n must be >= 3");
    const auto traces = run_seeds(c.seeds, thread_count(), [&](std::uint64_t seed) {
      return descend_cylinder(cylinder_start(grid, c.z_n, constraint, c.degree, seed), params,
                              opts_for(seed));
    });
    const std::size_t best = best_trace(traces);
    const auto match = match_to_family(traces[best].final_field, k2);
    report = io::trace_json(traces[best], k2, constraint, match.label);
    report["seed"] = best;
    report["label_distance"] = match.distance;
    report["axial_derivative_norm"] = axial_derivative_norm(traces[best].final_field);
    report["seeds"] = seed_summary(traces);
    if (!c.out_path.empty()) {
      Output field(c.out_path);
      io::write_cylinder_csv(field.stream(), traces[best].final_field);
    }
    if (c.format != "json") {
      write_seed_csv(std::cout, traces, best);
      std::cout << "# final_label=" << match.label << '\n';
      return 0;
    }
  } else {
    const auto traces = run_seeds(c.seeds, thread_count(), [&](std::uint64_t seed) {
      return descend_circle(circle_start(grid, constraint, c.degree, seed), params, opts_for(seed));
    });
    const std::size_t best = best_trace(traces);
    const auto& field = traces[best].final_field;
    const auto match = match_to_family(field, k2);
    report = io::trace_json(traces[best], k2, constraint, match.label);
    report["seed"] = best;
    report["label_distance"] = match.distance;
    if (constraint == Constraint::in_plane) {
      const int deg = winding_degree(field);
      report["final_degree"] = deg;
      if (deg == 0) report["closed_form_energy"] = solve_elliptic(k2).energy_deg0;
      if (deg == 1 || deg == -1) report["closed_form_energy"] = two_pi;
    }
    report["seeds"] = seed_summary(traces);
    if (!c.out_path.empty()) {
      Output file(c.out_path);
      io::write_field_csv(file.stream(), field);
    }
    if (c.format != "json") {
      write_seed_csv(std::cout, traces, best);
      std::cout << "# final_label=" << match.label << '\n';
      return 0;
    }
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_phase_portrait(const RunConfig& c) {
  const double k2 = require_kappa2(c);
  const std::size_t samples = c.steps == 0 ? 401 : c.steps;
  const std::vector<double> levels{-0.5 * k2, 0.0, 0.5, 1.0, 2.0};
  const auto curves = phase_portrait(k2, levels, samples);
  Output out(c.out_path);
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& cv : curves) {
      arr.push_back({{"level", cv.level}, {"branch", cv.branch}, {"x", cv.x}, {"y", cv.y}});
    }
    out.stream() << json{{"kappa2", k2}, {"separatrix_peak", std::sqrt(k2)}, {"curves", arr}}.dump(2)
                 << '\n';
  } else {
    out.stream() << "level,branch,x,y\n";
    for (const auto& cv : curves) {
      for (std::size_t i = 0; i < cv.x.size(); ++i) {
        out.stream() << io::fmt(cv.level) << ',' << cv.branch << ',' << io::fmt(cv.x[i]) << ','
                     << io::fmt(cv.y[i]) << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimizers of the anisotropic energy on the circle and the cylinder"};
  app.require_subcommand(1);
  RunConfig c;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out_path, "Output file (stdout when omitted)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };
  const auto add_kappa = [&](CLI::App* sub) { sub->add_option("--kappa2", c.kappa2, "Anisotropy kappa^2"); };
  const auto add_range = [&](CLI::App* sub) {
    sub->add_option("--kappa2-min", c.kappa2_min, "Sweep start");
    sub->add_option("--kappa2-max", c.kappa2_max, "Sweep end");
    sub->add_option("--steps", c.steps, "Number of sweep points (>= 2)");
  };

  auto* poincare = app.add_subcommand("poincare", "Sharp Poincare constant, closed form and numerical");
  add_kappa(poincare);
  add_range(poincare);
  poincare->add_option("--grid-n", c.grid_n, "Angular nodes");
  add_common(poincare);

  auto* sweep = app.add_subcommand("sweep", "Energy landscape over a kappa^2 range");
  add_range(sweep);
  add_common(sweep);

  auto* threshold = app.add_subcommand("threshold", "Anisotropy where degree 0 and 1 tie");
  threshold->add_option("--tol", c.tol, "Fail unless |residual| < tol");
  add_common(threshold);

  auto* elliptic = app.add_subcommand("elliptic", "alpha, E and the degree-zero energy");
  add_kappa(elliptic);
  add_range(elliptic);
  add_common(elliptic);

  auto* minimize = app.add_subcommand("minimize", "Multistart projected gradient descent");
  add_kappa(minimize);
  minimize->add_option("--grid-n", c.grid_n, "Angular nodes");
  minimize->add_option("--z-n", c.z_n, "Axial nodes (with --cylinder)");
  minimize->add_option("--seeds", c.seeds, "Number of random starts");
  minimize->add_option("--constraint", c.constraint, "none, in-plane or was")
      ->check(CLI::IsMember({"none", "in-plane", "was"}));
  minimize->add_option("--degree", c.degree, "Winding degree of the in-plane starts");
  minimize->add_flag("--cylinder", c.cylinder, "Descend on the cylinder instead of the circle");
  minimize->add_option("--tol", c.tol, "Gradient norm tolerance");
  add_common(minimize);

  auto* phase = app.add_subcommand("phase-portrait", "Level sets of y^2 - kappa^2 sin^2 x");
  add_kappa(phase);
  phase->add_option("--steps", c.steps, "Samples per curve");
  add_common(phase);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    c.command = sub->get_name();
    if (c.command == "poincare") return cmd_poincare(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "threshold") return cmd_threshold(c);
    if (c.command == "elliptic") return cmd_elliptic(c);
    if (c.command == "minimize") return cmd_minimize(c);
    return cmd_phase_portrait(c);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
}
