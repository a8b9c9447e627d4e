#ifndef POLYSTOKES_QUADRATURE_HPP
#define POLYSTOKES_QUADRATURE_HPP

#include <Eigen/Dense>
#include <vector>

namespace polystokes {

/// Quadrature rule on a reference element.
///
/// Triangle rules live on the unit reference triangle (0,0),(1,0),(0,1)
/// (measure 1/2); edge rules live on [-1,1] (measure 2). Weights sum to the
/// reference measure and the rule integrates all polynomials up to
/// `exactness` exactly.
struct QuadratureRule {
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;  // edge rules use column 0
  Eigen::VectorXd weights;
  int exactness = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Symmetric rule on the reference triangle exact up to `exactness` <= 20.
/// Throws UnsupportedDegree above that.
const QuadratureRule& triangle_rule(int exactness);

/// Gauss rule on [-1,1] exact up to `exactness` <= 20 (more points are never
/// needed here). Throws UnsupportedDegree above that.
const QuadratureRule& edge_rule(int exactness);

/// Nodes of the n-point Gauss-Legendre rule on [-1,1] (ascending).
Eigen::VectorXd gauss_legendre_nodes(int n);

/// Interior nodes of the (n+1)-point Gauss-Lobatto rule on [0,1], i.e. the
/// roots of P_n' mapped to (0,1), ascending. Used to place edge DOFs.
Eigen::VectorXd lobatto_interior_nodes(int n);

/// Legendre polynomial P_n(x).
double legendre_value(int n, double x);

}  // namespace polystokes

#endif
