#ifndef POLYSTOKES_RECONSTRUCTION_HPP
#define POLYSTOKES_RECONSTRUCTION_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "polystokes/mesh.hpp"
#include "polystokes/vem.hpp"

namespace polystokes {

/// Raviart-Thomas space RT_m on one cell's subtriangulation. Per triangle the
/// fields are a(x) + b(x) x with a in P_m^2, b in homogeneous P_m; normal
/// traces are continuous across interior sub-edges. DOFs: m+1 normal-flux
/// moments per sub-edge (Legendre weights along the canonical low-to-high
/// vertex direction, normalized by the edge length) and moments against
/// P_{m-1}(T)^2 per triangle (normalized by the triangle area).
class RTSpace {
 public:
  RTSpace(const PolygonalMesh& mesh, int cell, int m);

  int order() const { return m_; }
  int dim() const { return n_dofs_; }
  int cell() const { return cell_; }
  int num_triangles() const { return static_cast<int>(tris_.size()); }

  struct SubEdge {
    int a = -1, b = -1;     // local vertex ids, a < b (canonical direction)
    Vec2 pa, pb;
    Vec2 normal;            // canonical: rotate (pb-pa) by -90 degrees
    double length = 0.0;
    int polygon_side = -1;  // loop side when this is a cell-boundary edge
    std::array<int, 2> tris = {-1, -1};
  };
  const std::vector<SubEdge>& sub_edges() const { return edges_; }
  int num_sub_edges() const { return static_cast<int>(edges_.size()); }

  int edge_dof(int e, int moment) const { return e * (m_ + 1) + moment; }
  int interior_dof(int t, int i) const { return edge_dof_count_ + t * interior_per_tri_ + i; }
  int interior_per_triangle() const { return interior_per_tri_; }

  const Vec2& point(int local_v) const { return points_[static_cast<std::size_t>(local_v)]; }
  const std::array<int, 3>& triangle(int t) const { return tris_[static_cast<std::size_t>(t)]; }

  /// Value of the RT function at a point of triangle t.
  Vec2 eval(const Eigen::VectorXd& coef, int t, const Vec2& x) const;
  /// Divergence at a point of triangle t (a polynomial of degree m there).
  double eval_div(const Eigen::VectorXd& coef, int t, const Vec2& x) const;

  /// Mass matrix of the global basis.
  const Eigen::MatrixXd& mass() const { return mass_; }

  /// DOF evaluations of a pointwise field; for fields inside RT_m these are
  /// the coefficients of the standard interpolation.
  Eigen::VectorXd dof_values(const std::function<Vec2(const Vec2&)>& f, int volume_exactness,
                             int edge_exactness) const;

  /// Integrals int_K f . psi_g for every basis function.
  Eigen::VectorXd load_moments(const std::function<Vec2(const Vec2&)>& f, int exactness) const;

  /// Cross mass against the cell-scaled vector monomials of degree `deg`:
  /// (dim x 2*p_dim(deg)) with entries int_K psi_g . (m_i e_c).
  Eigen::MatrixXd poly_cross_mass(const CellFrame& frame, int deg) const;

  /// Moments int_T div(w) m_i for the scaled P_m(T) monomials of a cell-wide
  /// polynomial divergence (coefficients on the cell frame).

  Eigen::VectorXd divergence_targets(const CellFrame& frame, const Eigen::VectorXd& div_c) const;

  /// Constraint rows int_T div(psi_g) r for all triangles and r in the
  /// scaled P_m(T) monomials.
  const Eigen::MatrixXd& divergence_rows() const { return div_rows_; }

 private:
  int cell_;
  int m_;
  int edge_dof_count_ = 0;
  int interior_per_tri_ = 0;
  int n_dofs_ = 0;
  std::vector<Vec2> points_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<SubEdge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;  // edge id per triangle side

  // per-triangle frames and generator data
  struct TriData {
    Vec2 center;
    double h = 0.0, area = 0.0;
    Eigen::MatrixXd dual;      // generators x local dofs
    std::vector<int> global;   // local dof -> global dof
    Eigen::MatrixXd div_coef;  // p_dim(m) x generators (scaled monomials on T)
  };
  std::vector<TriData> tri_data_;
  Eigen::MatrixXd mass_;
  Eigen::MatrixXd div_rows_;

  int gen_dim() const { return (m_ + 1) * (m_ + 3); }
};

/// Standard RT_m interpolation of a cell-scaled vector polynomial, used as
/// the computable oracle the minimization is compared against.
Eigen::VectorXd rt_interpolate_polynomial(const RTSpace& space, const CellFrame& frame,
                                          const Eigen::VectorXd& vec_c);

/// The linear constraint system C w = g a reconstruction must satisfy.
struct ConstraintSet {
  Eigen::MatrixXd C;
  Eigen::VectorXd g;
  int div_rows = 0, gperp_rows = 0, flux_rows = 0;
};

/// Divergence-preserving reconstruction of virtual functions on one cell:
/// the minimizer of || Pi_grad v - w ||_{L2(K)} over the RT_m fields that
/// match the virtual divergence moments, the G_{m-1}^perp moments, and the
/// boundary normal-flux moments. The KKT system is factorized once per cell
/// and reused for every DOF vector.
class ReconstructionOperator {
 public:
  ReconstructionOperator(const PolygonalMesh& mesh, const CellContext& ctx, int m);

  const RTSpace& space() const { return space_; }
  int order() const { return space_.order(); }

  ConstraintSet build_constraints(const Eigen::VectorXd& local_dofs) const;

  /// Reconstruct one local DOF vector. Throws InfeasibleConstraints if the
  /// solved field violates C w = g beyond 1e-9 relative.
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& local_dofs) const;

  /// Reconstructions of all local basis DOF vectors: (space().dim() x nloc).
  const Eigen::MatrixXd& basis_matrix() const { return basis_; }

 private:
  const CellContext* ctx_;
  RTSpace space_;
  Eigen::MatrixXd constraint_rows_;   // C
  Eigen::MatrixXd constraint_dofmap_; // g = dofmap * local_dofs
  Eigen::MatrixXd objective_dofmap_;  // r = objmap * local_dofs
  std::vector<Eigen::Index> kept_rows_;
  Eigen::MatrixXd basis_;
};

}  // namespace polystokes

#endif
