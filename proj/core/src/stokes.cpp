#include "polystokes/stokes.hpp"

#include <cmath>

#include "polystokes/errors.hpp"

namespace polystokes {

std::string to_string(RhsMode mode) {
  switch (mode) {
    case RhsMode::CVEM: return "cvem";
    case RhsMode::EVEM: return "evem";
    case RhsMode::PRVEM1: return "prvem1";
    case RhsMode::PRVEM0: return "prvem0";
  }
  return "?";
}

RhsMode rhs_mode_from_string(const std::string& name) {
  if (name == "cvem") return RhsMode::CVEM;
  if (name == "evem") return RhsMode::EVEM;
  if (name == "prvem1") return RhsMode::PRVEM1;
  if (name == "prvem0") return RhsMode::PRVEM0;
  throw InvalidSpec("unknown rhs mode '" + name + "'");
}

SaddleSystem::SaddleSystem(const VemSpace& space) : space_(&space) {
  const PolygonalMesh& mesh = space.mesh();
  const DofLayout& layout = space.layout();

  boundary_mask_ = layout.boundary_velocity_mask(mesh);
  interior_index_.assign(static_cast<std::size_t>(layout.num_velocity_dofs()), -1);
  for (int g = 0; g < layout.num_velocity_dofs(); ++g)
    if (!boundary_mask_[static_cast<std::size_t>(g)])
      interior_index_[static_cast<std::size_t>(g)] = n_interior_++;

  std::vector<Eigen::Triplet<double>> a_trip, b_trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellContext& ctx = space.cell(c);
    const auto gdofs = layout.cell_velocity_dofs(mesh, c);
    const Eigen::MatrixXd& a = ctx.stiffness();
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j)
        if (a(i, j) != 0.0)
          a_trip.emplace_back(gdofs[static_cast<std::size_t>(i)], gdofs[static_cast<std::size_t>(j)],
                              a(i, j));
    const Eigen::MatrixXd& b = ctx.divergence_matrix();
    for (int l = 0; l < b.rows(); ++l)
      for (int j = 0; j < b.cols(); ++j)
        if (b(l, j) != 0.0)
          b_trip.emplace_back(layout.pressure_dof(c, l), gdofs[static_cast<std::size_t>(j)], b(l, j));
  }
  a_full_.resize(layout.num_velocity_dofs(), layout.num_velocity_dofs());
  a_full_.setFromTriplets(a_trip.begin(), a_trip.end());
  b_full_.resize(layout.num_pressure_dofs(), layout.num_velocity_dofs());
  b_full_.setFromTriplets(b_trip.begin(), b_trip.end());

  mean_row_ = Eigen::VectorXd::Zero(layout.num_pressure_dofs());
  for (int c = 0; c < mesh.num_cells(); ++c)
    mean_row_(layout.pressure_dof(c, 0)) = std::sqrt(mesh.geometry(c).area);
}

const ReconstructionOperator& SaddleSystem::reconstruction(int cell, int m) const {
  auto& table = recon_[m];
  if (table.empty()) table.resize(static_cast<std::size_t>(space_->mesh().num_cells()));
  auto& slot = table[static_cast<std::size_t>(cell)];
  if (!slot) slot = std::make_unique<ReconstructionOperator>(space_->mesh(), space_->cell(cell), m);
  return *slot;
}

Eigen::VectorXd SaddleSystem::assemble_load(RhsMode mode, const ForceField& f) const {
  const PolygonalMesh& mesh = space_->mesh();
  const DofLayout& layout = space_->layout();
  const int k = layout.k();
  if (mode == RhsMode::EVEM && !space_->enhanced())
    throw InvalidSpec("EVEM needs the enhanced space flag");

  Eigen::VectorXd load = Eigen::VectorXd::Zero(layout.num_velocity_dofs());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellContext& ctx = space_->cell(c);
    const auto gdofs = layout.cell_velocity_dofs(mesh, c);
    Eigen::VectorXd local;
    if (mode == RhsMode::CVEM || mode == RhsMode::EVEM) {
      const bool enhanced = mode == RhsMode::EVEM;
      const int s = enhanced ? k : k - 2;
      auto& cache = l2_cache_[enhanced];
      if (cache.empty()) cache.resize(static_cast<std::size_t>(mesh.num_cells()));
      if (cache[static_cast<std::size_t>(c)].size() == 0)
        cache[static_cast<std::size_t>(c)] = ctx.l2_projector(s, enhanced);
      const Eigen::MatrixXd& proj = cache[static_cast<std::size_t>(c)];
      // moments of f against the vector monomials of degree s, pointwise f
      Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * p_dim(s));
      const CellFrame& frame = ctx.frame();
      for (int q = 0; q < frame.nq(); ++q) {
        const Vec2 x = frame.qpoints()[static_cast<std::size_t>(q)];
        const Vec2 fv = f.value(x);
        const Eigen::VectorXd mono = frame.monomials_at(x, p_dim(s));
        for (int i = 0; i < p_dim(s); ++i) {
          w(2 * i) += frame.qweights()(q) * mono(i) * fv.x();
          w(2 * i + 1) += frame.qweights()(q) * mono(i) * fv.y();
        }
      }
      local = proj.transpose() * w;
    } else {
      const int m = mode == RhsMode::PRVEM1 ? k - 1 : 0;
      const ReconstructionOperator& op = reconstruction(c, m);
      const Eigen::VectorXd w = op.space().load_moments(f.value, space_->quad_exactness());
      local = op.basis_matrix().transpose() * w;
    }
    for (std::size_t i = 0; i < gdofs.size(); ++i)
      load(gdofs[i]) += local(static_cast<Eigen::Index>(i));
  }
  return load;
}

Eigen::VectorXd SaddleSystem::dirichlet_values(const std::function<Vec2(const Vec2&)>& g) const {
  const PolygonalMesh& mesh = space_->mesh();
  const DofLayout& layout = space_->layout();
  Eigen::VectorXd values = Eigen::VectorXd::Zero(layout.num_velocity_dofs());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!mesh.vertex_on_boundary(v)) continue;
    const Vec2 gv = g(mesh.vertex(v));
    values(layout.vertex_dof(v, 0)) = gv.x();
    values(layout.vertex_dof(v, 1)) = gv.y();
  }
  const Eigen::VectorXd& fractions = layout.edge_fractions();
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const MeshEdge& edge = mesh.edge(e);
    if (!edge.boundary()) continue;
    const Vec2 a = mesh.vertex(edge.a), b = mesh.vertex(edge.b);
    for (int l = 0; l < layout.edge_points(); ++l) {
      const Vec2 gv = g(a + fractions(l) * (b - a));
      values(layout.edge_dof(e, l, 0)) = gv.x();
      values(layout.edge_dof(e, l, 1)) = gv.y();
    }
  }
  return values;
}

const Eigen::SparseLU<Eigen::SparseMatrix<double>>& SaddleSystem::factorization() const {
  if (lu_) return *lu_;
  const DofLayout& layout = space_->layout();
  const int np = layout.num_pressure_dofs();
  const int n = ndof();

  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < a_full_.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_full_, col); it; ++it) {
      const int i = interior_index_[static_cast<std::size_t>(it.row())];
      const int j = interior_index_[static_cast<std::size_t>(it.col())];
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  for (int col = 0; col < b_full_.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(b_full_, col); it; ++it) {
      const int j = interior_index_[static_cast<std::size_t>(it.col())];
      if (j < 0) continue;
      trip.emplace_back(n_interior_ + static_cast<int>(it.row()), j, it.value());
      trip.emplace_back(j, n_interior_ + static_cast<int>(it.row()), it.value());
    }
  for (int l = 0; l < np; ++l) {
    if (mean_row_(l) == 0.0) continue;
    trip.emplace_back(n - 1, n_interior_ + l, mean_row_(l));
    trip.emplace_back(n_interior_ + l, n - 1, mean_row_(l));
  }
  system_matrix_.resize(n, n);
  system_matrix_.setFromTriplets(trip.begin(), trip.end());
  system_matrix_.makeCompressed();

  lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(system_matrix_);
  if (lu_->info() != Eigen::Success) throw SolverFailure("saddle-point factorization failed");
  return *lu_;
}

SaddleSystem::Solution SaddleSystem::solve(
    double nu, RhsMode mode, const ForceField& f,
    const std::function<Vec2(const Vec2&)>& dirichlet) const {
  if (!(nu > 0.0)) throw InvalidSpec("viscosity must be positive");
  const DofLayout& layout = space_->layout();
  const int np = layout.num_pressure_dofs();
  const int n = ndof();

  const Eigen::VectorXd load = assemble_load(mode, f);
  const Eigen::VectorXd bc = dirichlet_values(dirichlet);

  const Eigen::VectorXd a_bc = a_full_ * bc;
  const Eigen::VectorXd b_bc = b_full_ * bc;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int g = 0; g < layout.num_velocity_dofs(); ++g) {
    const int i = interior_index_[static_cast<std::size_t>(g)];
    if (i >= 0) rhs(i) = load(g) / nu - a_bc(g);
  }
  rhs.segment(n_interior_, np) = -b_bc;

  Eigen::VectorXd z = factorization().solve(rhs);
  const double rhs_norm = rhs.norm();
  // iterative refinement: the div block scales like |K| and would otherwise
  // cost a few digits of the algebraic residual on fine levels
  for (int it = 0; it < 3 && rhs_norm > 0.0; ++it) {
    const Eigen::VectorXd r = rhs - system_matrix_ * z;
    if (r.norm() <= 1e-14 * rhs_norm) break;
    z += factorization().solve(r);
  }
  const double resid = rhs_norm > 0.0 ? (system_matrix_ * z - rhs).norm() / rhs_norm : 0.0;
  if (resid > 1e-12) throw SolverFailure("saddle-point solve residual " + std::to_string(resid));

  Solution sol;
  sol.residual = resid;
  sol.velocity = bc;
  for (int g = 0; g < layout.num_velocity_dofs(); ++g) {
    const int i = interior_index_[static_cast<std::size_t>(g)];
    if (i >= 0) sol.velocity(g) = z(i);
  }
  // the multiplier block carries -p/nu: (grad p, v) = -(p, div v)
  sol.pressure = -nu * z.segment(n_interior_, np);
  // exact mean correction: subtract the constant (c^T p) / |Omega|
  const double area = space_->mesh().domain_area();
  const double mean = mean_row_.dot(sol.pressure) / area;
  for (int c = 0; c < space_->mesh().num_cells(); ++c)
    sol.pressure(layout.pressure_dof(c, 0)) -= mean * mean_row_(layout.pressure_dof(c, 0));
  return sol;
}

Eigen::VectorXd SaddleSystem::exact_gradient_load(const ForceField& f) const {
  // F(v) = int grad(q).v = sum_K [ bnd(q v.n) - (q, div v)_K ], computable
  // for virtual v; exact whenever the quadrature resolves the potential q.
  const PolygonalMesh& mesh = space_->mesh();
  const DofLayout& layout = space_->layout();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(layout.num_velocity_dofs());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellContext& ctx = space_->cell(c);
    const auto gdofs = layout.cell_velocity_dofs(mesh, c);
    Eigen::RowVectorXd row = ctx.boundary_functional(
        [&](const Vec2& x, const Vec2& nrm, int) { return Vec2(f.potential(x) * nrm); });
    const CellFrame& frame = ctx.frame();
    const int nkm1 = p_dim(layout.k() - 1);
    Eigen::VectorXd qp = Eigen::VectorXd::Zero(nkm1);
    for (int q = 0; q < frame.nq(); ++q) {
      const Vec2 x = frame.qpoints()[static_cast<std::size_t>(q)];
      qp += frame.qweights()(q) * f.potential(x) *
            (ctx.orthonormal_pressure().transpose() * frame.monomials_at(x, nkm1));
    }
    row -= qp.transpose() * ctx.divergence_matrix();
    for (std::size_t i = 0; i < gdofs.size(); ++i)
      load(gdofs[i]) += row(static_cast<Eigen::Index>(i));
  }
  return load;
}

double SaddleSystem::consistency_dual_norm(RhsMode mode, const ForceField& f,
                                           bool restrict_to_kernel) const {
  const DofLayout& layout = space_->layout();
  const Eigen::VectorXd reference =
      f.is_gradient() ? exact_gradient_load(f) : assemble_load(RhsMode::EVEM, f);
  const Eigen::VectorXd delta_full = reference - assemble_load(mode, f);

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n_interior_);
  for (int g = 0; g < layout.num_velocity_dofs(); ++g) {
    const int i = interior_index_[static_cast<std::size_t>(g)];
    if (i >= 0) delta(i) = delta_full(g);
  }

  Eigen::VectorXd riesz;
  if (restrict_to_kernel) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof());
    rhs.head(n_interior_) = delta;
    Eigen::VectorXd z = factorization().solve(rhs);
    const double rhs_norm = rhs.norm();
    for (int it = 0; it < 3 && rhs_norm > 0.0; ++it) {
      const Eigen::VectorXd r = rhs - system_matrix_ * z;
      if (r.norm() <= 1e-14 * rhs_norm) break;
      z += factorization().solve(r);
    }
    riesz = z.head(n_interior_);
  } else {
    if (!lu_velocity_) {
      std::vector<Eigen::Triplet<double>> trip;
      for (int col = 0; col < a_full_.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_full_, col); it; ++it) {
          const int i = interior_index_[static_cast<std::size_t>(it.row())];
          const int j = interior_index_[static_cast<std::size_t>(it.col())];
          if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
        }
      velocity_matrix_.resize(n_interior_, n_interior_);
      velocity_matrix_.setFromTriplets(trip.begin(), trip.end());
      velocity_matrix_.makeCompressed();
      lu_velocity_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      lu_velocity_->compute(velocity_matrix_);
      if (lu_velocity_->info() != Eigen::Success)
        throw SolverFailure("velocity-block factorization failed");
    }
    riesz = lu_velocity_->solve(delta);
  }
  return std::sqrt(std::max(0.0, delta.dot(riesz)));
}

double error_velocity(const VemSpace& space, const Eigen::VectorXd& velocity,
                      const std::function<Eigen::Matrix2d(const Vec2&)>& exact_grad_u) {
  const PolygonalMesh& mesh = space.mesh();
  const DofLayout& layout = space.layout();
  const int k = layout.k();
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellContext& ctx = space.cell(c);
    const auto gdofs = layout.cell_velocity_dofs(mesh, c);
    Eigen::VectorXd local(gdofs.size());
    for (std::size_t i = 0; i < gdofs.size(); ++i)
      local(static_cast<Eigen::Index>(i)) = velocity(gdofs[i]);
    const Eigen::VectorXd proj = ctx.gradient_projector() * local;
    Eigen::VectorXd px(p_dim(k)), py(p_dim(k));
    for (int i = 0; i < px.size(); ++i) {
      px(i) = proj(2 * i);
      py(i) = proj(2 * i + 1);
    }
    const CellFrame& frame = ctx.frame();
    const double h = frame.h();
    const Eigen::VectorXd dxx = poly_dx(px, h), dxy = poly_dy(px, h);
    const Eigen::VectorXd dyx = poly_dx(py, h), dyy = poly_dy(py, h);
    for (int q = 0; q < frame.nq(); ++q) {
      const Vec2 x = frame.qpoints()[static_cast<std::size_t>(q)];
      const Eigen::Matrix2d ge = exact_grad_u(x);
      Eigen::Matrix2d gh;
      gh(0, 0) = poly_eval(dxx, frame.center(), h, x);
      gh(0, 1) = poly_eval(dxy, frame.center(), h, x);
      gh(1, 0) = poly_eval(dyx, frame.center(), h, x);
      gh(1, 1) = poly_eval(dyy, frame.center(), h, x);
      total += frame.qweights()(q) * (ge - gh).squaredNorm();
    }
  }
  return std::sqrt(total);
}

double error_pressure(const VemSpace& space, const Eigen::VectorXd& pressure,
                      const std::function<double(const Vec2&)>& exact_p) {
  const PolygonalMesh& mesh = space.mesh();
  const DofLayout& layout = space.layout();
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellContext& ctx = space.cell(c);
    const CellFrame& frame = ctx.frame();
    Eigen::VectorXd coef(layout.dim_pressure());
    for (int l = 0; l < layout.dim_pressure(); ++l) coef(l) = pressure(layout.pressure_dof(c, l));
    const Eigen::VectorXd mono = ctx.orthonormal_pressure() * coef;
    for (int q = 0; q < frame.nq(); ++q) {
      const Vec2 x = frame.qpoints()[static_cast<std::size_t>(q)];
      const double diff = exact_p(x) - poly_eval(mono, frame.center(), frame.h(), x);
      total += frame.qweights()(q) * diff * diff;
    }
  }
  return std::sqrt(total);
}

Eigen::VectorXd cell_divergence(const VemSpace& space, int cell, const Eigen::VectorXd& velocity) {
  const auto gdofs = space.layout().cell_velocity_dofs(space.mesh(), cell);
  Eigen::VectorXd local(gdofs.size());
  for (std::size_t i = 0; i < gdofs.size(); ++i)
    local(static_cast<Eigen::Index>(i)) = velocity(gdofs[i]);
  return space.cell(cell).divergence_from_dofs(local);
}

}  // namespace polystokes
