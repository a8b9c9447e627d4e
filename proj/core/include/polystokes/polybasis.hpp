#ifndef POLYSTOKES_POLYBASIS_HPP
#define POLYSTOKES_POLYBASIS_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>

#include "polystokes/mesh.hpp"

namespace polystokes {

/// dim P_s = (s+1)(s+2)/2
int p_dim(int s);
/// Degree of the basis with `dim` members (inverse of p_dim; throws on mismatch).
int p_degree_of_dim(int dim);
/// Exponents (ax, ay) of the i-th scaled monomial in graded order.
std::array<int, 2> p_exponent(int i);

// Polynomials on a cell are coefficient vectors over the scaled monomial
// basis m_i(x) = ((x - x_K)/h_K)^alpha_i in graded order. Vector-valued
// polynomials interleave components: coefficient 2*i + c multiplies
// m_i * e_c. All derivatives below are physical (they carry the 1/h_K).

Eigen::VectorXd poly_dx(const Eigen::VectorXd& c, double h);
Eigen::VectorXd poly_dy(const Eigen::VectorXd& c, double h);
/// Gradient of a scalar polynomial as an interleaved vector polynomial.
Eigen::VectorXd poly_gradient(const Eigen::VectorXd& scalar_c, double h);
/// Divergence of an interleaved vector polynomial.
Eigen::VectorXd poly_divergence(const Eigen::VectorXd& vec_c, double h);
/// Laplacian of each component of an interleaved vector polynomial.
Eigen::VectorXd poly_vector_laplacian(const Eigen::VectorXd& vec_c, double h);

double poly_eval(const Eigen::VectorXd& scalar_c, const Vec2& center, double h, const Vec2& x);
Vec2 poly_eval_vec(const Eigen::VectorXd& vec_c, const Vec2& center, double h, const Vec2& x);

/// Geometric frame of one cell: scaled-monomial data and an interior
/// quadrature over the cell's subtriangulation. Immutable once built.
class CellFrame {
 public:
  CellFrame(const PolygonalMesh& mesh, int cell, int max_degree, int exactness);

  int cell() const { return cell_; }
  int max_degree() const { return max_degree_; }
  const Vec2& center() const { return center_; }
  double h() const { return h_; }
  double area() const { return area_; }

  int nq() const { return static_cast<int>(qw_.size()); }
  const std::vector<Vec2>& qpoints() const { return qp_; }
  const Eigen::VectorXd& qweights() const { return qw_; }

  /// Values of the first `dim` monomials at all quadrature points (nq x dim).
  auto monomials(int dim) const { return mono_.leftCols(dim); }
  Eigen::VectorXd monomials_at(const Vec2& x, int dim) const;

  /// L2(K) Gram of the scalar basis of P_s.
  Eigen::MatrixXd scalar_gram(int s) const;
  /// L2(K) Gram of the interleaved vector basis of P_s^2.
  Eigen::MatrixXd vector_gram(int s) const;

  /// Coefficients (columns) of an L2(K)-orthonormal basis of P_s; the first
  /// member is the normalized constant 1/sqrt|K|.
  Eigen::MatrixXd orthonormal_scalar(int s) const;

  /// Integral of the scalar polynomial c over the cell.
  double integrate_scalar(const Eigen::VectorXd& c) const;
  /// Integrals of all first `dim` monomials (the Gram column of m_0).
  Eigen::VectorXd monomial_integrals(int dim) const;

  /// Values of scalar polynomial at quadrature points.
  Eigen::VectorXd values_at_q(const Eigen::VectorXd& scalar_c) const;

 private:
  int cell_;
  int max_degree_;
  Vec2 center_;
  double h_;
  double area_;
  std::vector<Vec2> qp_;
  Eigen::VectorXd qw_;
  Eigen::MatrixXd mono_;       // nq x p_dim(max_degree)
  Eigen::MatrixXd gram_full_;  // p_dim(max_degree)^2
};

/// L2(K)-orthonormal basis of G_s(K)^perp, the orthogonal complement of
/// grad P_{s+1}(K) inside P_s(K)^2. Columns of `coef` are members in the
/// interleaved vector monomial basis of degree s.
struct GPerpBasis {
  int degree = 0;
  Eigen::MatrixXd coef;
  int dim() const { return static_cast<int>(coef.cols()); }
};

/// Expected dim G_s^perp = dim P_s^2 - dim P_{s+1} + 1.
int gperp_dim(int s);

GPerpBasis gperp_basis(const CellFrame& frame, int s);

/// q = grad(r) + g_perp with r of degree s+1 and zero mean on K.
struct PolyDecomposition {
  Eigen::VectorXd gradient_potential;  // scalar coefficients, degree s+1
  Eigen::VectorXd perp_part;           // interleaved vector coefficients, degree s
};
PolyDecomposition decompose_poly(const CellFrame& frame, const Eigen::VectorXd& vec_c);

/// Quadrature of a point-evaluable integrand over one cell's subtriangulation.
double integrate_on_cell(const PolygonalMesh& mesh, int cell,
                         const std::function<double(const Vec2&)>& integrand, int exactness);

/// Physical quadrature points/weights over a cell's subtriangulation.
void cell_quadrature(const PolygonalMesh& mesh, int cell, int exactness, std::vector<Vec2>& points,
                     Eigen::VectorXd& weights);

}  // namespace polystokes

#endif
