#include "polystokes/harness.hpp"
#include <algorithm>
#include <tuple>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>

#include "polystokes/errors.hpp"

namespace polystokes {

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Hydrostatic: return "hydrostatic";
    case ExperimentId::Vorticity: return "vorticity";
    case ExperimentId::Potflow2: return "potflow2";
    case ExperimentId::Potflow3: return "potflow3";
  }
  return "?";
}

ExperimentId experiment_from_string(const std::string& name) {
  if (name == "hydrostatic") return ExperimentId::Hydrostatic;
  if (name == "vorticity") return ExperimentId::Vorticity;
  if (name == "potflow2") return ExperimentId::Potflow2;
  if (name == "potflow3") return ExperimentId::Potflow3;
  throw InvalidSpec("unknown experiment '" + name + "'");
}

ExperimentSpec default_spec(ExperimentId id) {
  ExperimentSpec spec;
  spec.experiment = id;
  spec.modes = {RhsMode::CVEM, RhsMode::EVEM, RhsMode::PRVEM1, RhsMode::PRVEM0};
  switch (id) {
    case ExperimentId::Hydrostatic:
      spec.levels = {2};
      spec.nus = {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
      break;
    case ExperimentId::Vorticity:
      spec.levels = {0, 1, 2, 3, 4};
      spec.nus = {1.0, 1e-4};
      break;
    case ExperimentId::Potflow2:
    case ExperimentId::Potflow3:
      spec.levels = {0, 1, 2, 3};
      spec.nus = {1.0, 1e-4};
      break;
  }
  return spec;
}

namespace {

double hydrostatic_p(const Vec2& v) {
  double s = 0.0;
  for (int j = 0; j <= 7; ++j) s += std::pow(v.x(), j) * std::pow(v.y(), 7 - j);
  return s - 761.0 / 1260.0;
}

Vec2 hydrostatic_grad_p(const Vec2& v) {
  double fx = 0.0, fy = 0.0;
  for (int j = 1; j <= 7; ++j) fx += j * std::pow(v.x(), j - 1) * std::pow(v.y(), 7 - j);
  for (int j = 0; j <= 6; ++j) fy += (7 - j) * std::pow(v.x(), j) * std::pow(v.y(), 6 - j);
  return {fx, fy};
}

// vorticity experiment: u = curl(x^2 (x-1)^2 y^2 (y-1)^2)
double bx(double x) { return x * x * (x - 1.0) * (x - 1.0); }       // x^2(x-1)^2
double dbx(double x) { return 2.0 * x * (x - 1.0) * (2.0 * x - 1.0); }
double d2bx(double x) { return 12.0 * x * x - 12.0 * x + 2.0; }
double d3bx(double x) { return 24.0 * x - 12.0; }

Vec2 vorticity_u(const Vec2& v) {
  return {-bx(v.x()) * dbx(v.y()), dbx(v.x()) * bx(v.y())};
}

Eigen::Matrix2d vorticity_grad_u(const Vec2& v) {
  Eigen::Matrix2d g;
  g(0, 0) = -dbx(v.x()) * dbx(v.y());
  g(0, 1) = -bx(v.x()) * d2bx(v.y());
  g(1, 0) = d2bx(v.x()) * bx(v.y());
  g(1, 1) = dbx(v.x()) * dbx(v.y());
  return g;
}

Vec2 vorticity_laplace_u(const Vec2& v) {
  return {-d2bx(v.x()) * dbx(v.y()) - bx(v.x()) * d3bx(v.y()),
          d3bx(v.x()) * bx(v.y()) + dbx(v.x()) * d2bx(v.y())};
}

double vorticity_p(const Vec2& v) {
  return std::sin(2.0 * M_PI * v.x()) * std::cos(2.0 * M_PI * v.y());
}

Vec2 vorticity_grad_p(const Vec2& v) {
  const double c = 2.0 * M_PI;
  return {c * std::cos(c * v.x()) * std::cos(c * v.y()),
          -c * std::sin(c * v.x()) * std::sin(c * v.y())};
}

}  // namespace

StokesProblem experiment_problem(ExperimentId id, double nu) {
  StokesProblem prob;
  prob.nu = nu;
  switch (id) {
    case ExperimentId::Hydrostatic:
      prob.force.value = hydrostatic_grad_p;
      prob.force.potential = hydrostatic_p;
      prob.dirichlet = [](const Vec2&) { return Vec2(0.0, 0.0); };
      prob.exact_grad_u = [](const Vec2&) { return Eigen::Matrix2d::Zero().eval(); };
      prob.exact_p = hydrostatic_p;
      break;
    case ExperimentId::Vorticity:
      prob.force.value = [nu](const Vec2& x) {
        return Vec2(-nu * vorticity_laplace_u(x) + vorticity_grad_p(x));
      };
      prob.dirichlet = vorticity_u;
      prob.exact_grad_u = vorticity_grad_u;
      prob.exact_p = vorticity_p;
      break;
    case ExperimentId::Potflow2:
      prob.force.value = [](const Vec2& x) { return Vec2(4.0 * x.x(), 4.0 * x.y()); };
      prob.force.potential = [](const Vec2& x) {
        return 2.0 * (x.x() * x.x() + x.y() * x.y()) - 4.0 / 3.0;
      };
      prob.dirichlet = [](const Vec2& x) { return Vec2(2.0 * x.x(), -2.0 * x.y()); };
      prob.exact_grad_u = [](const Vec2&) {
        Eigen::Matrix2d g;
        g << 2.0, 0.0, 0.0, -2.0;
        return g;
      };
      prob.exact_p = [](const Vec2& x) {
        return 2.0 * (x.x() * x.x() + x.y() * x.y()) - 4.0 / 3.0;
      };
      break;
    case ExperimentId::Potflow3:
      prob.force.value = [](const Vec2& v) {
        const double x = v.x(), y = v.y();
        return Vec2(18.0 * (x * x * x + x * y * y), 18.0 * (y * y * y + x * x * y));
      };
      prob.force.potential = [](const Vec2& v) {
        const double x = v.x(), y = v.y();
        return 4.5 * (x * x * x * x + y * y * y * y) + 9.0 * x * x * y * y - 14.0 / 5.0;
      };
      prob.dirichlet = [](const Vec2& v) {
        return Vec2(3.0 * v.x() * v.x() - 3.0 * v.y() * v.y(), -6.0 * v.x() * v.y());
      };
      prob.exact_grad_u = [](const Vec2& v) {
        Eigen::Matrix2d g;
        g << 6.0 * v.x(), -6.0 * v.y(), -6.0 * v.y(), -6.0 * v.x();
        return g;
      };
      prob.exact_p = [](const Vec2& v) {
        const double x = v.x(), y = v.y();
        return 4.5 * (x * x * x * x + y * y * y * y) + 9.0 * x * x * y * y - 14.0 / 5.0;
      };
      break;
  }
  return prob;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& user_spec) {
  ExperimentSpec spec = user_spec;
  if (spec.modes.empty()) throw InvalidSpec("experiment spec needs at least one rhs mode");
  {
    const ExperimentSpec defaults = default_spec(spec.experiment);
    if (spec.levels.empty()) spec.levels = defaults.levels;
    if (spec.nus.empty()) spec.nus = defaults.nus;
  }
  for (int level : spec.levels)
    if (level < 0) throw InvalidSpec("levels must be nonnegative");
  for (double nu : spec.nus)
    if (!(nu > 0.0)) throw InvalidSpec("viscosities must be positive");

  // one space + factorization per level, shared across modes and viscosities
  struct LevelData {
    std::unique_ptr<PolygonalMesh> mesh;
    std::unique_ptr<VemSpace> space;
    std::unique_ptr<SaddleSystem> system;
  };
  std::vector<LevelData> data;
  for (int level : spec.levels) {
    LevelData d;
    d.mesh = std::make_unique<PolygonalMesh>(!spec.mesh_file.empty() ? load_mesh(spec.mesh_file)
                                                                     : build_paper_mesh(level));
    VemOptions opt;
    opt.quad_exactness = spec.quad_exactness;
    opt.enhanced = true;
    d.space = std::make_unique<VemSpace>(*d.mesh, spec.k, opt);
    d.system = std::make_unique<SaddleSystem>(*d.space);
    data.push_back(std::move(d));
  }

  std::vector<ResultRow> rows;
  for (RhsMode mode : spec.modes) {
    for (double nu : spec.nus) {
      const StokesProblem prob = experiment_problem(spec.experiment, nu);
      for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        const LevelData& d = data[li];
        const auto t0 = std::chrono::steady_clock::now();
        const SaddleSystem::Solution sol = d.system->solve(nu, mode, prob.force, prob.dirichlet);
        ResultRow row;
        row.experiment = to_string(spec.experiment);
        row.mode = to_string(mode);
        row.nu = nu;
        row.level = spec.levels[li];
        row.ndof = d.system->ndof();
        row.err_vel = error_velocity(*d.space, sol.velocity, prob.exact_grad_u);
        row.err_p = error_pressure(*d.space, sol.pressure, prob.exact_p);
        const auto t1 = std::chrono::steady_clock::now();
        row.seconds =
            spec.record_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
        rows.push_back(std::move(row));
      }
    }
  }
  compute_rates(rows);
  return rows;
}

void compute_rates(std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i)
    groups[{rows[i].experiment, rows[i].mode, rows[i].nu}].push_back(i);
  for (auto& [key, idx] : groups) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return rows[a].level < rows[b].level; });
    for (std::size_t j = 1; j < idx.size(); ++j) {
      ResultRow& cur = rows[idx[j]];
      const ResultRow& prev = rows[idx[j - 1]];
      const double hfac = std::log(std::sqrt(double(cur.ndof) / prev.ndof));
      if (hfac > 0.0 && prev.err_vel > 0.0 && cur.err_vel > 0.0)
        cur.rate_vel = std::log(prev.err_vel / cur.err_vel) / hfac;
      if (hfac > 0.0 && prev.err_p > 0.0 && cur.err_p > 0.0)
        cur.rate_p = std::log(prev.err_p / cur.err_p) / hfac;
    }
  }
}

std::string csv_string(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,mode,nu,level,ndof,err_vel,rate_vel,err_p,rate_p,seconds\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return std::string(buf);
  };
  auto rate = [&](double v) { return std::isnan(v) ? std::string() : num(v); };
  for (const ResultRow& r : rows) {
    out += r.experiment + ',' + r.mode + ',' + num(r.nu) + ',' + std::to_string(r.level) + ',' +
           std::to_string(r.ndof) + ',' + num(r.err_vel) + ',' + rate(r.rate_vel) + ',' +
           num(r.err_p) + ',' + rate(r.rate_p) + ',' + num(r.seconds) + '\n';
  }
  return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << csv_string(rows);
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace polystokes
