// polystokes: divergence-free VEM Stokes solver on polygonal meshes with
// pluggable right-hand-side discretizations.
//
// Subcommands:
//   run    solve one experiment over a mesh-level range and emit a CSV
//   mesh   generate a mesh of the composite family and save it
//   check  run the built-in invariant battery
//
// Exit codes: 0 success, 2 solver/verification failure, 3 invalid spec.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polystokes/errors.hpp"
#include "polystokes/harness.hpp"
#include "polystokes/reconstruction.hpp"

namespace {

using namespace polystokes;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> levels;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(s.substr(0, dots));
    const int hi = std::stoi(s.substr(dots + 2));
    if (hi < lo) throw InvalidSpec("bad level range '" + s + "'");
    for (int l = lo; l <= hi; ++l) levels.push_back(l);
  } else {
    for (const std::string& part : split_csv(s)) levels.push_back(std::stoi(part));
  }
  return levels;
}

int run_command(const std::string& experiment, const std::string& modes, const std::string& nus,
                const std::string& levels, int k, const std::string& out,
                const std::string& mesh_file, int quad_exactness, bool no_timing) {
  ExperimentSpec spec = default_spec(experiment_from_string(experiment));
  spec.k = k;
  spec.quad_exactness = quad_exactness;
  spec.mesh_file = mesh_file;
  spec.record_timing = !no_timing;
  if (!modes.empty()) {
    spec.modes.clear();
    for (const std::string& m : split_csv(modes)) spec.modes.push_back(rhs_mode_from_string(m));
  }
  if (!nus.empty()) {
    spec.nus.clear();
    for (const std::string& n : split_csv(nus)) spec.nus.push_back(std::stod(n));
  }
  if (!levels.empty()) spec.levels = parse_levels(levels);

  const std::vector<ResultRow> rows = run_experiment(spec);
  emit_csv(rows, out);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

int mesh_command(int level, const std::string& out) {
  const PolygonalMesh mesh = build_paper_mesh(level);
  save_mesh(mesh, out);
  std::cout << "level " << level << ": " << mesh.num_vertices() << " vertices, "
            << mesh.num_cells() << " cells, " << mesh.num_edges() << " edges -> " << out << "\n";
  return 0;
}

// Invariant battery: a quick standalone sweep over the load-bearing
// properties; the full suites live in the test binaries.
int check_command() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // mesh family
  {
    const PolygonalMesh m0 = build_paper_mesh(0);
    double area = 0.0;
    for (int c = 0; c < m0.num_cells(); ++c) area += m0.geometry(c).area;
    report("mesh: level-0 cell areas sum to 1", std::abs(area - 1.0) <= 1e-12);
    const ShapeReport rep0 = check_shape_regularity(m0);
    bool gamma_ok = rep0.min_gamma1() > 0.05 && rep0.min_gamma2() > 0.05;
    for (int level = 1; level <= 3 && gamma_ok; ++level) {
      const ShapeReport rep = check_shape_regularity(build_paper_mesh(level));
      gamma_ok = rep.min_gamma1() >= 0.9 * rep0.min_gamma1() &&
                 rep.min_gamma2() >= 0.9 * rep0.min_gamma2();
    }
    report("mesh: shape regularity uniform over levels 0-3", gamma_ok);
    double prev = m0.mesh_size();
    bool halving = true;
    for (int level = 1; level <= 3; ++level) {
      const double h = build_paper_mesh(level).mesh_size();
      halving = halving && h / prev >= 0.45 && h / prev <= 0.55;
      prev = h;
    }
    report("mesh: size halves per level", halving);
  }

  // dof counts and projectors
  {
    const PolygonalMesh mesh = build_paper_mesh(1);
    const VemSpace space(mesh, 2, {.enhanced = true});
    const SaddleSystem system(space);
    report("vem: level-1 system has 763 unknowns", system.ndof() == 763,
           std::to_string(system.ndof()));

    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const CellContext& ctx = space.cell(c);
      const int nv = 2 * p_dim(2);
      worst = std::max(worst, (ctx.gradient_projector() * ctx.polynomial_dofs() -
                               Eigen::MatrixXd::Identity(nv, nv))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    report("vem: energy projector reproduces P_2", worst <= 1e-11, std::to_string(worst));
  }

  // reconstruction and robustness
  {
    const PolygonalMesh mesh = build_paper_mesh(0);
    const VemSpace space(mesh, 2, {.enhanced = true});
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const CellContext& ctx = space.cell(c);
      for (int m : {0, 1}) {
        const ReconstructionOperator op(mesh, ctx, m);
        // divergence preservation on every basis DOF: check the constraint
        // residual of the basis matrix against the divergence targets
        const ConstraintSet set = op.build_constraints(
            Eigen::VectorXd::Unit(ctx.n_local(), std::min(3, ctx.n_local() - 1)));
        const Eigen::VectorXd w =
            op.basis_matrix() * Eigen::VectorXd::Unit(ctx.n_local(), std::min(3, ctx.n_local() - 1));
        worst = std::max(worst, (set.C * w - set.g).cwiseAbs().maxCoeff());
      }
    }
    report("reconstruction: constraints satisfied", worst <= 1e-10, std::to_string(worst));

    const SaddleSystem system(space);
    const StokesProblem prob = experiment_problem(ExperimentId::Potflow2, 1e-4);
    const auto sol = system.solve(1e-4, RhsMode::PRVEM1, prob.force, prob.dirichlet);
    const double err = error_velocity(space, sol.velocity, prob.exact_grad_u);
    report("stokes: potential flow solved to roundoff by the robust mode", err <= 1e-9,
           std::to_string(err));

    const StokesProblem hyd = experiment_problem(ExperimentId::Hydrostatic, 1e-4);
    const auto hsol = system.solve(1e-4, RhsMode::PRVEM0, hyd.force, hyd.dirichlet);
    const double herr = 1e-4 * error_velocity(space, hsol.velocity, hyd.exact_grad_u);
    report("stokes: gradient forces leave the velocity untouched", herr <= 1e-10,
           std::to_string(herr));
  }

  std::cout << (failures == 0 ? "all checks passed\n" : "some checks FAILED\n");
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divergence-free VEM Stokes solver on polygonal meshes"};
  app.require_subcommand(1);

  std::string experiment, modes, nus, levels, out = "results.csv", mesh_file;
  int k = 2, quad_exactness = -1, level = 0;
  bool no_timing = false;
  std::string mesh_out = "mesh.txt";

  CLI::App* run = app.add_subcommand("run", "run one experiment and emit a CSV");
  run->add_option("--experiment", experiment, "hydrostatic|vorticity|potflow2|potflow3")
      ->required();
  run->add_option("--modes", modes, "comma list of cvem,evem,prvem1,prvem0");
  run->add_option("--nu", nus, "comma list of viscosities");
  run->add_option("--levels", levels, "level range a..b or comma list");
  run->add_option("--k", k, "polynomial order (>= 2)");
  run->add_option("--out", out, "output CSV path");
  run->add_option("--mesh-file", mesh_file, "run on this mesh instead of the generated family");
  run->add_option("--quad-exactness", quad_exactness, "override the assembly quadrature degree");
  run->add_flag("--no-timing", no_timing, "zero the seconds column (deterministic output)");

  CLI::App* mesh = app.add_subcommand("mesh", "generate a composite-family mesh");
  mesh->add_option("--level", level, "refinement level")->required();
  mesh->add_option("--out", mesh_out, "output path");

  CLI::App* check = app.add_subcommand("check", "run the invariant battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (run->parsed())
      return run_command(experiment, modes, nus, levels, k, out, mesh_file, quad_exactness,
                         no_timing);
    if (mesh->parsed()) return mesh_command(level, mesh_out);
    if (check->parsed()) return check_command();
  } catch (const InvalidSpec& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return 3;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 3;
}
