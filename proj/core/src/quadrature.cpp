#include "polystokes/quadrature.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "polystokes/errors.hpp"

namespace polystokes {

namespace {

constexpr int kMaxExactness = 20;

// Legendre P_n and P_n' at x by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

QuadratureRule gauss_rule(int n) {
  QuadratureRule rule;
  rule.exactness = 2 * n - 1;
  rule.points.setZero(n, 2);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p, dp;
    legendre(n, x, p, dp);
    rule.points(i, 0) = x;
    rule.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // ascending nodes
  for (int i = 0; i < n / 2; ++i) {
    std::swap(rule.points(i, 0), rule.points(n - 1 - i, 0));
    std::swap(rule.weights(i), rule.weights(n - 1 - i));
  }
  return rule;
}

struct TriPoint {
  double x, y, w;
};

// Classical symmetric rules up to degree 5 (barycentric orbits, weights
// relative to the triangle area).
std::vector<TriPoint> classical_rule(int degree) {
  std::vector<TriPoint> pts;
  auto orbit3 = [&](double a, double b, double w) {
    // barycentric permutations of (a, b, b); cartesian (x,y) = (l1, l2)
    pts.push_back({b, b, w});
    pts.push_back({a, b, w});
    pts.push_back({b, a, w});
  };
  switch (degree) {
    case 0:
    case 1:
      pts.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0});
      break;
    case 2:
      orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 3:
      pts.push_back({1.0 / 3.0, 1.0 / 3.0, -27.0 / 48.0});
      orbit3(0.6, 0.2, 25.0 / 48.0);
      break;
    case 4:
      orbit3(0.108103018168070, 0.445948490915965, 0.223381589678011);
      orbit3(0.816847572980459, 0.091576213509771, 0.109951743655322);
      break;
    case 5:
      pts.push_back({1.0 / 3.0, 1.0 / 3.0, 0.225});
      orbit3(0.059715871789770, 0.470142064105115, 0.132394152788506);
      orbit3(0.797426985353087, 0.101286507323456, 0.125939180544827);
      break;
    default:
      break;
  }
  return pts;
}

// Collapsed Gauss product rule on the reference triangle, symmetrized over
// the three barycentric rotations. All weights positive, so tiny monomial
// integrals keep full relative accuracy.
std::vector<TriPoint> product_rule(int degree) {
  const int n = (degree + 3) / 2;  // 2n-1 >= degree+1 covers the (1-v) factor
  const QuadratureRule g = gauss_rule(n);
  std::vector<TriPoint> base;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (g.points(i, 0) + 1.0);
    const double wu = 0.5 * g.weights(i);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (g.points(j, 0) + 1.0);
      const double wv = 0.5 * g.weights(j);
      base.push_back({u * (1.0 - v), v, wu * wv * (1.0 - v) * 2.0});  // relative to area 1/2
    }
  }
  std::vector<TriPoint> pts;
  pts.reserve(base.size() * 3);
  for (const TriPoint& p : base) {
    const double w = p.w / 3.0;
    pts.push_back({p.x, p.y, w});
    pts.push_back({p.y, 1.0 - p.x - p.y, w});
    pts.push_back({1.0 - p.x - p.y, p.x, w});
  }
  return pts;
}

QuadratureRule make_triangle_rule(int degree) {
  std::vector<TriPoint> pts = degree <= 5 ? classical_rule(degree) : product_rule(degree);
  QuadratureRule rule;
  rule.exactness = degree;
  const int n = static_cast<int>(pts.size());
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points(i, 0) = pts[static_cast<std::size_t>(i)].x;
    rule.points(i, 1) = pts[static_cast<std::size_t>(i)].y;
    rule.weights(i) = 0.5 * pts[static_cast<std::size_t>(i)].w;
  }
  return rule;
}

}  // namespace

const QuadratureRule& triangle_rule(int exactness) {
  if (exactness < 0 || exactness > kMaxExactness)
    throw UnsupportedDegree("triangle_rule: exactness " + std::to_string(exactness) +
                            " outside [0, 20]");
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> r;
    for (int d = 0; d <= kMaxExactness; ++d) r.push_back(make_triangle_rule(d));
    return r;
  }();
  return rules[static_cast<std::size_t>(exactness)];
}

const QuadratureRule& edge_rule(int exactness) {
  if (exactness < 0 || exactness > kMaxExactness)
    throw UnsupportedDegree("edge_rule: exactness " + std::to_string(exactness) +
                            " outside [0, 20]");
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> r;
    for (int n = 1; n <= kMaxExactness / 2 + 1; ++n) r.push_back(gauss_rule(n));
    return r;
  }();
  const int n = exactness / 2 + 1;  // 2n-1 >= exactness
  return rules[static_cast<std::size_t>(n - 1)];
}

Eigen::VectorXd gauss_legendre_nodes(int n) { return gauss_rule(n).points.col(0); }

double legendre_value(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return 1.0;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

Eigen::VectorXd lobatto_interior_nodes(int n) {
  // Roots of P_n', bracketed by the midpoints of adjacent P_n roots.
  if (n < 2) return Eigen::VectorXd(0);
  const Eigen::VectorXd gl = gauss_legendre_nodes(n);
  Eigen::VectorXd roots(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    double x = 0.5 * (gl(i) + gl(i + 1));
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre(n, x, p, dp);
      // p'' from the Legendre ODE: (1-x^2) p'' = 2x p' - n(n+1) p
      const double d2p = (2.0 * x * dp - n * (n + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    roots(i) = 0.5 * (x + 1.0);
  }
  return roots;
}

}  // namespace polystokes
