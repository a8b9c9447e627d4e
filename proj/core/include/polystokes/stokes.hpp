#ifndef POLYSTOKES_STOKES_HPP
#define POLYSTOKES_STOKES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <map>
#include <memory>
#include <string>

#include "polystokes/reconstruction.hpp"
#include "polystokes/vem.hpp"

namespace polystokes {

/// The four right-hand-side discretizations.
enum class RhsMode { CVEM, EVEM, PRVEM1, PRVEM0 };

std::string to_string(RhsMode mode);
RhsMode rhs_mode_from_string(const std::string& name);

/// Point-evaluable body force. When the force is a gradient field the
/// potential makes the exact load functional computable from the DOFs, which
/// the consistency probe uses.
struct ForceField {
  std::function<Vec2(const Vec2&)> value;
  std::function<double(const Vec2&)> potential;  // optional: value = grad(potential)
  bool is_gradient() const { return static_cast<bool>(potential); }
};

/// One Stokes problem instance.
struct StokesProblem {
  double nu = 1.0;
  ForceField force;
  std::function<Vec2(const Vec2&)> dirichlet;  // trace of the exact velocity
  std::function<Eigen::Matrix2d(const Vec2&)> exact_grad_u;  // row i = grad(u_i)
  std::function<double(const Vec2&)> exact_p;                // mean-zero over the domain
};

/// Assembled global saddle-point system. The velocity block is the
/// 1/nu-scaled a_h, so the factorized matrix is viscosity-independent:
/// solving for (u, p/nu) keeps nu * ||velocity residual|| at roundoff level.
/// Boundary velocity DOFs are eliminated; one Lagrange multiplier enforces
/// the zero pressure mean.
class SaddleSystem {
 public:
  explicit SaddleSystem(const VemSpace& space);

  const VemSpace& space() const { return *space_; }

  /// Total unknowns: interior velocity DOFs + pressure DOFs + 1 multiplier.
  int ndof() const { return n_interior_ + layout().num_pressure_dofs() + 1; }

  /// The mode's load functional over all velocity DOFs (not yet nu-scaled).
  Eigen::VectorXd assemble_load(RhsMode mode, const ForceField& f) const;

  struct Solution {
    Eigen::VectorXd velocity;  // all velocity DOFs, boundary values included
    Eigen::VectorXd pressure;  // orthonormal-basis coefficients, mean-zero, nu-rescaled
    double residual = 0.0;     // relative algebraic residual
  };

  /// Assemble the load, apply Dirichlet data, and solve.
  Solution solve(double nu, RhsMode mode, const ForceField& f,
                 const std::function<Vec2(const Vec2&)>& dirichlet) const;

  /// a_h(nu=1) norm of the Riesz representative of F - F_mode over the
  /// zero-trace space, restricted to the discretely divergence-free subspace
  /// when asked. F uses the exact potential when the force carries one and
  /// the enhanced pi_k functional otherwise.
  double consistency_dual_norm(RhsMode mode, const ForceField& f, bool restrict_to_kernel) const;

  const DofLayout& layout() const { return space_->layout(); }
  const std::vector<bool>& boundary_mask() const { return boundary_mask_; }

  /// Per-cell reconstruction operators backing the PRVEM modes.
  const ReconstructionOperator& reconstruction(int cell, int m) const;

 private:
  Eigen::VectorXd dirichlet_values(const std::function<Vec2(const Vec2&)>& g) const;
  const Eigen::SparseLU<Eigen::SparseMatrix<double>>& factorization() const;
  Eigen::VectorXd exact_gradient_load(const ForceField& f) const;

  const VemSpace* space_;
  std::vector<bool> boundary_mask_;
  std::vector<int> interior_index_;  // velocity dof -> interior position or -1
  int n_interior_ = 0;
  Eigen::SparseMatrix<double> a_full_;   // all velocity dofs
  Eigen::SparseMatrix<double> b_full_;   // pressure x all velocity dofs
  Eigen::VectorXd mean_row_;             // integral of each pressure basis fn

  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_velocity_;
  mutable Eigen::SparseMatrix<double> system_matrix_;
  mutable Eigen::SparseMatrix<double> velocity_matrix_;
  mutable std::map<int, std::vector<std::unique_ptr<ReconstructionOperator>>> recon_;
  mutable std::map<bool, std::vector<Eigen::MatrixXd>> l2_cache_;  // key: enhanced
};

/// || grad(u - Pi_k^grad u_h) ||_{L2(Omega)} by subtriangulation quadrature.
double error_velocity(const VemSpace& space, const Eigen::VectorXd& velocity,
                      const std::function<Eigen::Matrix2d(const Vec2&)>& exact_grad_u);

/// || p - p_h ||_{L2(Omega)}.
double error_pressure(const VemSpace& space, const Eigen::VectorXd& pressure,
                      const std::function<double(const Vec2&)>& exact_p);

/// Divergence coefficients of the solved velocity on one cell (monomials).
Eigen::VectorXd cell_divergence(const VemSpace& space, int cell, const Eigen::VectorXd& velocity);

}  // namespace polystokes

#endif
