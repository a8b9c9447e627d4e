#ifndef POLYSTOKES_HARNESS_HPP
#define POLYSTOKES_HARNESS_HPP

#include <limits>
#include <string>
#include <vector>

#include "polystokes/stokes.hpp"

namespace polystokes {

/// The three experiment families (the potential flow comes in two degrees).
enum class ExperimentId { Hydrostatic, Vorticity, Potflow2, Potflow3 };

std::string to_string(ExperimentId id);
ExperimentId experiment_from_string(const std::string& name);

struct ExperimentSpec {
  ExperimentId experiment = ExperimentId::Vorticity;
  int k = 2;
  std::vector<RhsMode> modes;
  std::vector<double> nus;
  std::vector<int> levels;
  int quad_exactness = -1;      // default from the space
  std::string mesh_file;        // when set, run on this mesh instead of the family
  bool record_timing = true;    // false zeroes the seconds column
};

/// Levels and viscosities used when a spec leaves them empty.
ExperimentSpec default_spec(ExperimentId id);

struct ResultRow {
  std::string experiment;
  std::string mode;
  double nu = 1.0;
  int level = 0;
  int ndof = 0;
  double err_vel = 0.0;
  double err_p = 0.0;
  double rate_vel = std::numeric_limits<double>::quiet_NaN();  // NaN = blank
  double rate_p = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

/// Exact data of one experiment at one viscosity (forces, boundary trace,
/// reference fields). The harness touches the exact solution only through
/// the Dirichlet trace and the load.
StokesProblem experiment_problem(ExperimentId id, double nu);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Rates with respect to ndof^{-1/2}, blank on each group's first level.
void compute_rates(std::vector<ResultRow>& rows);

std::string csv_string(const std::vector<ResultRow>& rows);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

}  // namespace polystokes

#endif
