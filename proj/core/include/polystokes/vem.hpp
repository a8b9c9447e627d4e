#ifndef POLYSTOKES_VEM_HPP
#define POLYSTOKES_VEM_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "polystokes/mesh.hpp"
#include "polystokes/polybasis.hpp"

namespace polystokes {

/// Global numbering of the order-k velocity/pressure degrees of freedom.
///
/// Velocity: 2 values per vertex, 2(k-1) values per edge at the symmetric
/// Gauss-Lobatto interior points (enumerated along the edge's canonical
/// a->b direction so neighbours agree), per-cell moments against the
/// L2-orthonormal basis of G_{k-2}^perp, and per-cell divergence moments
/// against the orthonormal basis of P_{k-1}/R. Pressure: dim P_{k-1}
/// coefficients per cell in the same orthonormal basis.
class DofLayout {
 public:
  DofLayout(const PolygonalMesh& mesh, int k);

  int k() const { return k_; }
  int edge_points() const { return k_ - 1; }
  int dim_gperp() const { return gperp_dim(k_ - 2); }
  int dim_div() const { return p_dim(k_ - 1) - 1; }
  int dim_pressure() const { return p_dim(k_ - 1); }

  /// Fractions of the edge DOF points along the canonical direction.
  const Eigen::VectorXd& edge_fractions() const { return edge_fractions_; }

  int num_velocity_dofs() const { return n_velocity_; }
  int num_pressure_dofs() const { return n_pressure_; }

  int vertex_dof(int v, int comp) const { return 2 * v + comp; }
  int edge_dof(int e, int point, int comp) const {
    return edge_offset_ + e * 2 * (k_ - 1) + 2 * point + comp;
  }
  int gperp_dof(int cell, int i) const { return gperp_offset_ + cell * dim_gperp() + i; }
  int div_dof(int cell, int i) const { return div_offset_ + cell * dim_div() + i; }
  int pressure_dof(int cell, int i) const { return cell * dim_pressure() + i; }

  int local_velocity_count(int n_cell_vertices) const {
    return 2 * n_cell_vertices * k_ + dim_gperp() + dim_div();
  }

  /// Local-to-global map of one cell's velocity DOFs, in the local order
  /// used by CellContext.
  std::vector<int> cell_velocity_dofs(const PolygonalMesh& mesh, int cell) const;

  /// Velocity DOFs sitting on the domain boundary (vertex values on boundary
  /// vertices and edge values on boundary edges).
  std::vector<bool> boundary_velocity_mask(const PolygonalMesh& mesh) const;

 private:
  int k_;
  int edge_offset_, gperp_offset_, div_offset_;
  int n_velocity_, n_pressure_;
  Eigen::VectorXd edge_fractions_;
};

/// All computable local operators of one cell: the energy projector, L2
/// projectors, divergence recovery, stabilization, and the local Stokes
/// matrices. Matrices act on the cell's local DOF vector.
class CellContext {
 public:
  CellContext(const PolygonalMesh& mesh, const DofLayout& layout, int cell, int quad_exactness);

  int cell() const { return cell_; }
  int n_vertices() const { return n_; }
  int n_local() const { return nloc_; }
  const CellFrame& frame() const { return frame_; }
  const DofLayout& layout() const { return *layout_; }

  /// Per-side trace data: the k+1 polynomial nodes of the velocity trace,
  /// their local DOF slots, and an edge quadrature.
  struct SideTrace {
    int mesh_edge = -1;
    Vec2 normal;                    // outward
    double length = 0.0;
    Vec2 canon_a, canon_b;          // canonical endpoints (lower id -> higher)
    std::vector<Vec2> qpoints;
    Eigen::VectorXd qweights;       // physical (sum to length)
    Eigen::MatrixXd lagrange;       // nq x (k+1)
    std::vector<int> node_dof_x;    // local dof of each node's x component
    std::vector<Vec2> node_points;
  };
  const std::vector<SideTrace>& sides() const { return sides_; }

  /// Exact DOF evaluations of a vector polynomial of degree <= k+2.
  Eigen::VectorXd dofs_of_polynomial(const Eigen::VectorXd& vec_c) const;

  /// Energy projector: maps local DOFs to P_k^2 coefficients.
  const Eigen::MatrixXd& gradient_projector() const { return pi_coef_; }
  /// Same projector expressed DOFs -> DOFs.
  const Eigen::MatrixXd& gradient_projector_dofs() const { return pi_dof_; }

  /// L2 projector onto P_s^2 (coefficients). Classical mode reaches
  /// s <= k-2, enhanced mode s <= k. Throws OrderTooHigh beyond.
  Eigen::MatrixXd l2_projector(int s, bool enhanced) const;

  /// Divergence of the virtual function as monomial coefficients (degree k-1).
  Eigen::VectorXd divergence_from_dofs(const Eigen::VectorXd& local_dofs) const;
  /// Rows = coefficients of div in the orthonormal P_{k-1} basis; also the
  /// local pressure-velocity coupling b^K(p_l, phi_j).
  const Eigen::MatrixXd& divergence_matrix() const { return div_on_; }

  /// Dofi-dofi stabilization: the identity in normalized DOF coordinates.
  Eigen::MatrixXd stabilization() const { return Eigen::MatrixXd::Identity(nloc_, nloc_); }

  /// nu-independent local velocity matrix: a_h^K = nu * stiffness().
  const Eigen::MatrixXd& stiffness() const { return a_hat_; }

  /// Moments of the virtual function against P_{k-2}^2 monomials (computable
  /// exactly from the DOFs); row 2i+c is the moment against m_i e_c.
  const Eigen::MatrixXd& moments_km2() const { return mom_km2_; }

  /// Orthonormal pressure basis coefficients (columns, degree k-1 monomials).
  const Eigen::MatrixXd& orthonormal_pressure() const { return press_on_; }
  const GPerpBasis& gperp() const { return gperp_; }

  /// Row functional sum_E int_E trace(phi) . weight(x) ds over local DOFs.
  Eigen::RowVectorXd boundary_functional(
      const std::function<Vec2(const Vec2& x, const Vec2& normal, int side)>& weight) const;
  /// Single-side version.
  Eigen::RowVectorXd side_functional(
      int side, const std::function<Vec2(const Vec2& x)>& weight) const;

  /// DOF matrix of the vector monomial basis of degree k (column 2i+c holds
  /// the DOFs of m_i e_c); full column rank by unisolvence.
  const Eigen::MatrixXd& polynomial_dofs() const { return dof_of_poly_; }

 private:
  void build_sides(const PolygonalMesh& mesh);
  Eigen::RowVectorXd moment_row(const Eigen::VectorXd& vec_c) const;

  int cell_;
  int n_;
  int nloc_;
  const DofLayout* layout_;
  CellFrame frame_;
  std::vector<SideTrace> sides_;
  GPerpBasis gperp_;            // G_{k-2}^perp, orthonormal
  Eigen::MatrixXd press_on_;    // orthonormal P_{k-1}
  Eigen::MatrixXd div_on_;      // p_dim(k-1) x nloc
  Eigen::MatrixXd mom_km2_;     // 2 p_dim(k-2) x nloc
  Eigen::MatrixXd pi_coef_;     // 2 p_dim(k) x nloc
  Eigen::MatrixXd pi_dof_;      // nloc x nloc
  Eigen::MatrixXd a_hat_;       // nloc x nloc
  Eigen::MatrixXd dof_of_poly_; // nloc x 2 p_dim(k)
  Eigen::MatrixXd grad_gram_;   // 2 p_dim(k) square stiffness Gram
};

struct VemOptions {
  int quad_exactness = -1;  // default: max(2k+4, 10)
  bool enhanced = false;    // affects only how far l2 projectors reach
};

/// The order-k virtual element space on a mesh: DOF layout plus one
/// CellContext per cell. Cells are immutable once built.
class VemSpace {
 public:
  VemSpace(const PolygonalMesh& mesh, int k, VemOptions options = {});

  const PolygonalMesh& mesh() const { return *mesh_; }
  const DofLayout& layout() const { return layout_; }
  const CellContext& cell(int c) const { return *cells_[static_cast<std::size_t>(c)]; }
  int k() const { return layout_.k(); }
  int quad_exactness() const { return exactness_; }
  bool enhanced() const { return options_.enhanced; }

 private:
  const PolygonalMesh* mesh_;
  DofLayout layout_;
  VemOptions options_;
  int exactness_;
  std::vector<std::unique_ptr<CellContext>> cells_;
};

}  // namespace polystokes

#endif
