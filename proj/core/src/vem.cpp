#include "polystokes/vem.hpp"

#include <cmath>

#include "polystokes/errors.hpp"
#include "polystokes/quadrature.hpp"

namespace polystokes {

// ---------------------------------------------------------------------------
// DofLayout

DofLayout::DofLayout(const PolygonalMesh& mesh, int k) : k_(k) {
  if (k < 2) throw InvalidSpec("the velocity/pressure pairing needs k >= 2");
  edge_offset_ = 2 * mesh.num_vertices();
  gperp_offset_ = edge_offset_ + 2 * (k - 1) * mesh.num_edges();
  div_offset_ = gperp_offset_ + dim_gperp() * mesh.num_cells();
  n_velocity_ = div_offset_ + dim_div() * mesh.num_cells();
  n_pressure_ = dim_pressure() * mesh.num_cells();
  edge_fractions_ = lobatto_interior_nodes(k);
}

std::vector<int> DofLayout::cell_velocity_dofs(const PolygonalMesh& mesh, int cell) const {
  const auto& loop = mesh.cell(cell);
  const int n = static_cast<int>(loop.size());
  std::vector<int> dofs;
  dofs.reserve(static_cast<std::size_t>(local_velocity_count(n)));
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < 2; ++c) dofs.push_back(vertex_dof(loop[static_cast<std::size_t>(j)], c));
  for (int j = 0; j < n; ++j) {
    const int e = mesh.edge_of(cell, j);
    for (int l = 0; l < k_ - 1; ++l)
      for (int c = 0; c < 2; ++c) dofs.push_back(edge_dof(e, l, c));
  }
  for (int i = 0; i < dim_gperp(); ++i) dofs.push_back(gperp_dof(cell, i));
  for (int i = 0; i < dim_div(); ++i) dofs.push_back(div_dof(cell, i));
  return dofs;
}

std::vector<bool> DofLayout::boundary_velocity_mask(const PolygonalMesh& mesh) const {
  std::vector<bool> mask(static_cast<std::size_t>(n_velocity_), false);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.vertex_on_boundary(v))
      for (int c = 0; c < 2; ++c) mask[static_cast<std::size_t>(vertex_dof(v, c))] = true;
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edge(e).boundary())
      for (int l = 0; l < k_ - 1; ++l)
        for (int c = 0; c < 2; ++c) mask[static_cast<std::size_t>(edge_dof(e, l, c))] = true;
  return mask;
}

// ---------------------------------------------------------------------------
// CellContext

CellContext::CellContext(const PolygonalMesh& mesh, const DofLayout& layout, int cell,
                         int quad_exactness)
    : cell_(cell),
      n_(static_cast<int>(mesh.cell(cell).size())),
      layout_(&layout),
      frame_(mesh, cell, layout.k() + 2, quad_exactness) {
  const int k = layout.k();
  nloc_ = layout.local_velocity_count(n_);
  build_sides(mesh);

  gperp_ = gperp_basis(frame_, k - 2);
  press_on_ = frame_.orthonormal_scalar(k - 1);

  const int nk = p_dim(k);
  const int nkm1 = p_dim(k - 1);
  const int dim_g = layout.dim_gperp();
  const int gperp_base = 2 * n_ * k;
  const int div_base = gperp_base + dim_g;

  // Divergence recovery: coefficients of div(v) in the orthonormal P_{k-1}
  // basis. The mean-value row comes from the boundary flux.
  div_on_ = Eigen::MatrixXd::Zero(nkm1, nloc_);
  div_on_.row(0) = boundary_functional([](const Vec2&, const Vec2& nrm, int) { return nrm; }) /
                   std::sqrt(frame_.area());
  for (int l = 1; l < nkm1; ++l) div_on_(l, div_base + l - 1) = frame_.area();

  // Moments against P_{k-2}^2 via the splitting q = grad r + g_perp:
  // (v, grad r) = bnd(r v.n) - (div v, r) and (v, g_perp) straight from DV3.
  const int nv_km2 = 2 * p_dim(k - 2);
  mom_km2_ = Eigen::MatrixXd::Zero(nv_km2, nloc_);
  const Eigen::MatrixXd gram_km1 = frame_.scalar_gram(k - 1);
  const Eigen::MatrixXd gram_vkm2 =
      k >= 3 ? Eigen::MatrixXd(frame_.vector_gram(k - 2)) : Eigen::MatrixXd();
  for (int i = 0; i < nv_km2; ++i) {
    Eigen::VectorXd basis = Eigen::VectorXd::Zero(nv_km2);
    basis(i) = 1.0;
    const PolyDecomposition dec = decompose_poly(frame_, basis);
    const Eigen::VectorXd& r = dec.gradient_potential;  // degree k-1, zero mean
    Eigen::RowVectorXd row = boundary_functional([&](const Vec2& x, const Vec2& nrm, int) {
      return Vec2(poly_eval(r, frame_.center(), frame_.h(), x) * nrm);
    });
    const Eigen::VectorXd rp = press_on_.transpose() * gram_km1 * r;
    row -= rp.transpose() * div_on_;
    if (dim_g > 0) {
      const Eigen::VectorXd beta = gperp_.coef.transpose() * gram_vkm2 * dec.perp_part;
      for (int l = 0; l < dim_g; ++l) row(gperp_base + l) += beta(l) * frame_.area();
    }
    mom_km2_.row(i) = row;
  }

  // Stiffness Gram of the vector monomial basis of degree k.
  grad_gram_ = Eigen::MatrixXd::Zero(2 * nk, 2 * nk);
  {
    Eigen::MatrixXd dxv(frame_.nq(), nk), dyv(frame_.nq(), nk);
    for (int i = 0; i < nk; ++i) {
      Eigen::VectorXd mono = Eigen::VectorXd::Zero(nk);
      mono(i) = 1.0;
      const Eigen::VectorXd dx = poly_dx(mono, frame_.h());
      const Eigen::VectorXd dy = poly_dy(mono, frame_.h());
      dxv.col(i) = frame_.monomials(static_cast<int>(dx.size())) * dx;
      dyv.col(i) = frame_.monomials(static_cast<int>(dy.size())) * dy;
    }
    const Eigen::MatrixXd s = dxv.transpose() * frame_.qweights().asDiagonal() * dxv +
                              dyv.transpose() * frame_.qweights().asDiagonal() * dyv;
    for (int i = 0; i < nk; ++i)
      for (int j = 0; j < nk; ++j) {
        grad_gram_(2 * i, 2 * j) = s(i, j);
        grad_gram_(2 * i + 1, 2 * j + 1) = s(i, j);
      }
  }

  // Energy projector: a(q, Pi v) = a(q, v) for all q in P_k^2, evaluated from
  // the DOFs by parts; the constant kernel is fixed by the cell average.
  Eigen::MatrixXd b_mat(2 * nk, nloc_);
  for (int i2 = 0; i2 < 2 * nk; ++i2) {
    const int i = i2 / 2, c = i2 % 2;
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(nk);
    mono(i) = 1.0;
    const Eigen::VectorXd dx = poly_dx(mono, frame_.h());
    const Eigen::VectorXd dy = poly_dy(mono, frame_.h());
    Eigen::RowVectorXd row = boundary_functional([&](const Vec2& x, const Vec2& nrm, int) {
      const double dn = poly_eval(dx, frame_.center(), frame_.h(), x) * nrm.x() +
                        poly_eval(dy, frame_.center(), frame_.h(), x) * nrm.y();
      Vec2 w(0.0, 0.0);
      w(c) = dn;
      return w;
    });
    // volume part: -(Delta m e_c, v) through the P_{k-2} moments
    const Eigen::VectorXd lap = poly_dx(dx, frame_.h()) + poly_dy(dy, frame_.h());
    for (int j = 0; j < lap.size(); ++j)
      if (lap(j) != 0.0) row -= lap(j) * mom_km2_.row(2 * j + c);
    b_mat.row(i2) = row;
  }

  Eigen::MatrixXd g_mat = grad_gram_;
  const Eigen::VectorXd ints = frame_.monomial_integrals(nk);
  for (int c = 0; c < 2; ++c) {
    g_mat.row(c).setZero();
    for (int i = 0; i < nk; ++i) g_mat(c, 2 * i + c) = ints(i);
    // computable cell average of v_c: int_K v_c = bnd(x_c v.n) - (div v, x_c)
    Eigen::VectorXd coord = Eigen::VectorXd::Zero(nkm1);
    coord(0) = c == 0 ? frame_.center().x() : frame_.center().y();
    coord(1 + c) = frame_.h();
    Eigen::RowVectorXd row = boundary_functional([&](const Vec2& x, const Vec2& nrm, int) {
      return Vec2((c == 0 ? x.x() : x.y()) * nrm);
    });
    row -= (press_on_.transpose() * gram_km1 * coord).transpose() * div_on_;
    b_mat.row(c) = row;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(g_mat);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw SingularLocalSystem("energy projector system is singular on cell " +
                              std::to_string(cell));
  pi_coef_ = lu.solve(b_mat);

  // DOFs of the P_k^2 monomials, then the DOF-to-DOF projector and a_h.
  dof_of_poly_.resize(nloc_, 2 * nk);
  for (int i2 = 0; i2 < 2 * nk; ++i2) {
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(2 * nk);
    mono(i2) = 1.0;
    dof_of_poly_.col(i2) = dofs_of_polynomial(mono);
  }
  pi_dof_ = dof_of_poly_ * pi_coef_;
  const Eigen::MatrixXd resid = Eigen::MatrixXd::Identity(nloc_, nloc_) - pi_dof_;
  a_hat_ = pi_coef_.transpose() * grad_gram_ * pi_coef_ + resid.transpose() * resid;
}

void CellContext::build_sides(const PolygonalMesh& mesh) {
  const int k = layout_->k();
  const auto& loop = mesh.cell(cell_);
  const CellGeometry& geom = mesh.geometry(cell_);
  const QuadratureRule& rule = edge_rule(std::min(2 * k + 2, 20));
  const Eigen::VectorXd& fractions = layout_->edge_fractions();

  sides_.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    SideTrace& side = sides_[static_cast<std::size_t>(j)];
    const int jn = (j + 1) % n_;
    const int e = mesh.edge_of(cell_, j);
    const MeshEdge& edge = mesh.edge(e);
    side.mesh_edge = e;
    side.normal = geom.edge_normals[static_cast<std::size_t>(j)];
    side.length = geom.edge_lengths[static_cast<std::size_t>(j)];
    side.canon_a = mesh.vertex(edge.a);
    side.canon_b = mesh.vertex(edge.b);
    const Vec2 p0 = mesh.vertex(loop[static_cast<std::size_t>(j)]);
    const Vec2 p1 = mesh.vertex(loop[static_cast<std::size_t>(jn)]);
    const bool forward = loop[static_cast<std::size_t>(j)] == edge.a;

    std::vector<double> params(static_cast<std::size_t>(k + 1));
    side.node_dof_x.resize(static_cast<std::size_t>(k + 1));
    side.node_points.resize(static_cast<std::size_t>(k + 1));
    params[0] = 0.0;
    side.node_dof_x[0] = 2 * j;
    side.node_points[0] = p0;
    params[static_cast<std::size_t>(k)] = 1.0;
    side.node_dof_x[static_cast<std::size_t>(k)] = 2 * jn;
    side.node_points[static_cast<std::size_t>(k)] = p1;
    const int edge_base = 2 * n_ + j * 2 * (k - 1);
    for (int l = 0; l < k - 1; ++l) {
      const double f = fractions(l);
      params[static_cast<std::size_t>(l + 1)] = forward ? f : 1.0 - f;
      side.node_dof_x[static_cast<std::size_t>(l + 1)] = edge_base + 2 * l;
      side.node_points[static_cast<std::size_t>(l + 1)] =
          side.canon_a + f * (side.canon_b - side.canon_a);
    }

    const int nq = rule.size();
    side.qpoints.resize(static_cast<std::size_t>(nq));
    side.qweights.resize(nq);
    side.lagrange.resize(nq, k + 1);
    for (int q = 0; q < nq; ++q) {
      const double t = 0.5 * (rule.points(q, 0) + 1.0);
      side.qpoints[static_cast<std::size_t>(q)] = p0 + t * (p1 - p0);
      side.qweights(q) = 0.5 * rule.weights(q) * side.length;
      for (int i = 0; i <= k; ++i) {
        double l = 1.0;
        for (int m = 0; m <= k; ++m) {
          if (m == i) continue;
          l *= (t - params[static_cast<std::size_t>(m)]) /
               (params[static_cast<std::size_t>(i)] - params[static_cast<std::size_t>(m)]);
        }
        side.lagrange(q, i) = l;
      }
    }
  }
}

Eigen::RowVectorXd CellContext::boundary_functional(
    const std::function<Vec2(const Vec2&, const Vec2&, int)>& weight) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nloc_);
  for (int j = 0; j < n_; ++j) {
    const SideTrace& side = sides_[static_cast<std::size_t>(j)];
    for (int q = 0; q < side.qweights.size(); ++q) {
      const Vec2 w = weight(side.qpoints[static_cast<std::size_t>(q)], side.normal, j);
      for (std::size_t i = 0; i < side.node_dof_x.size(); ++i) {
        const double l = side.qweights(q) * side.lagrange(q, static_cast<int>(i));
        row(side.node_dof_x[i]) += l * w.x();
        row(side.node_dof_x[i] + 1) += l * w.y();
      }
    }
  }
  return row;
}

Eigen::RowVectorXd CellContext::side_functional(
    int j, const std::function<Vec2(const Vec2&)>& weight) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nloc_);
  const SideTrace& side = sides_[static_cast<std::size_t>(j)];
  for (int q = 0; q < side.qweights.size(); ++q) {
    const Vec2 w = weight(side.qpoints[static_cast<std::size_t>(q)]);
    for (std::size_t i = 0; i < side.node_dof_x.size(); ++i) {
      const double l = side.qweights(q) * side.lagrange(q, static_cast<int>(i));
      row(side.node_dof_x[i]) += l * w.x();
      row(side.node_dof_x[i] + 1) += l * w.y();
    }
  }
  return row;
}

Eigen::VectorXd CellContext::dofs_of_polynomial(const Eigen::VectorXd& vec_c) const {
  const int k = layout_->k();
  const int dq = p_degree_of_dim(static_cast<int>(vec_c.size()) / 2);
  if (dq > k + 2)
    throw OrderTooHigh("dofs_of_polynomial: degree " + std::to_string(dq) + " above k+2");
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(nloc_);

  for (const SideTrace& side : sides_) {
    for (std::size_t i = 0; i < side.node_dof_x.size(); ++i) {
      const Vec2 v = poly_eval_vec(vec_c, frame_.center(), frame_.h(), side.node_points[i]);
      dofs(side.node_dof_x[i]) = v.x();
      dofs(side.node_dof_x[i] + 1) = v.y();
    }
  }

  const int gperp_base = 2 * n_ * k;
  const int nq = static_cast<int>(vec_c.size()) / 2;
  if (gperp_.dim() > 0) {
    const Eigen::MatrixXd gram = frame_.scalar_gram(std::max(dq, k - 2));
    for (int l = 0; l < gperp_.dim(); ++l) {
      double m = 0.0;
      for (int i = 0; i < nq; ++i)
        for (int jj = 0; jj < p_dim(k - 2); ++jj)
          m += gram(i, jj) * (vec_c(2 * i) * gperp_.coef(2 * jj, l) +
                              vec_c(2 * i + 1) * gperp_.coef(2 * jj + 1, l));
      dofs(gperp_base + l) = m / frame_.area();
    }
  }

  const Eigen::VectorXd divq = poly_divergence(vec_c, frame_.h());
  if (divq.size() > 0) {
    const int nd = static_cast<int>(divq.size());
    const Eigen::MatrixXd gram = frame_.scalar_gram(std::max(dq - 1, k - 1));
    const Eigen::VectorXd moments =
        press_on_.transpose() * gram.topLeftCorner(p_dim(k - 1), nd) * divq;
    const int div_base = gperp_base + layout_->dim_gperp();
    for (int l = 1; l < p_dim(k - 1); ++l) dofs(div_base + l - 1) = moments(l) / frame_.area();
  }
  return dofs;
}

Eigen::RowVectorXd CellContext::moment_row(const Eigen::VectorXd& vec_c) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nloc_);
  for (int i = 0; i < vec_c.size(); ++i)
    if (vec_c(i) != 0.0) row += vec_c(i) * mom_km2_.row(i);
  return row;
}

Eigen::VectorXd CellContext::divergence_from_dofs(const Eigen::VectorXd& local_dofs) const {
  return press_on_ * (div_on_ * local_dofs);
}

Eigen::MatrixXd CellContext::l2_projector(int s, bool enhanced) const {
  const int k = layout_->k();
  if (!enhanced && s > k - 2)
    throw OrderTooHigh("classical l2 projector reaches s <= k-2, got s = " + std::to_string(s));
  if (enhanced && s > k)
    throw OrderTooHigh("enhanced l2 projector reaches s <= k, got s = " + std::to_string(s));
  if (s < 0) return Eigen::MatrixXd::Zero(0, nloc_);

  if (!enhanced || s <= k - 2) {
    const Eigen::MatrixXd mom = mom_km2_.topRows(2 * p_dim(s));
    return frame_.vector_gram(s).llt().solve(mom);
  }

  // Enhanced moments against P_k^2: gradients of P_{k+1} by parts, DV3
  // moments, and the enhancement constraint on the part of G_k^perp that is
  // L2-orthogonal to G_{k-2}^perp.
  const int nk = p_dim(k);
  const int rows_grad = p_dim(k + 1) - 1;
  const int dim_g = gperp_.dim();
  const GPerpBasis gk = gperp_basis(frame_, k);
  const Eigen::MatrixXd hk = frame_.vector_gram(k);

  Eigen::MatrixXd a_part;
  if (dim_g == 0) {
    a_part = gk.coef;
  } else {
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(2 * nk, dim_g);
    padded.topRows(gperp_.coef.rows()) = gperp_.coef;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(padded.transpose() * hk * gk.coef);
    lu.setThreshold(1e-10);
    a_part = gk.coef * lu.kernel();
  }
  if (rows_grad + dim_g + static_cast<int>(a_part.cols()) != 2 * nk)
    throw RankError("enhanced moment system has wrong rank on cell " + std::to_string(cell_));

  Eigen::MatrixXd w_sys(2 * nk, 2 * nk);
  Eigen::MatrixXd rhs(2 * nk, nloc_);
  const int gperp_base = 2 * n_ * k;
  int r = 0;
  for (int j = 1; j < p_dim(k + 1); ++j, ++r) {
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(p_dim(k + 1));
    mono(j) = 1.0;
    w_sys.row(r) = poly_gradient(mono, frame_.h()).transpose();
    Eigen::RowVectorXd row = boundary_functional([&](const Vec2& x, const Vec2& nrm, int) {
      return Vec2(poly_eval(mono, frame_.center(), frame_.h(), x) * nrm);
    });
    const Eigen::VectorXd rp =
        press_on_.transpose() *
        frame_.scalar_gram(k + 1).topLeftCorner(p_dim(k - 1), p_dim(k + 1)) * mono;
    row -= rp.transpose() * div_on_;
    rhs.row(r) = row;
  }
  for (int l = 0; l < dim_g; ++l, ++r) {
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(2 * nk);
    padded.head(gperp_.coef.rows()) = gperp_.coef.col(l);
    w_sys.row(r) = padded.transpose();
    rhs.row(r).setZero();
    rhs(r, gperp_base + l) = frame_.area();
  }
  for (int i = 0; i < a_part.cols(); ++i, ++r) {
    w_sys.row(r) = a_part.col(i).transpose();
    rhs.row(r) = a_part.col(i).transpose() * hk * pi_coef_;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(w_sys);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw RankError("enhanced moment system singular on cell " + std::to_string(cell_));
  const Eigen::MatrixXd mom_k = lu.solve(rhs);
  return frame_.vector_gram(s).llt().solve(mom_k.topRows(2 * p_dim(s)));
}

// ---------------------------------------------------------------------------
// VemSpace

VemSpace::VemSpace(const PolygonalMesh& mesh, int k, VemOptions options)
    : mesh_(&mesh), layout_(mesh, k), options_(options) {
  exactness_ = options.quad_exactness > 0 ? options.quad_exactness : std::max(2 * k + 4, 10);
  cells_.reserve(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c)
    cells_.push_back(std::make_unique<CellContext>(mesh, layout_, c, exactness_));
}

}  // namespace polystokes
