#include "polystokes/polybasis.hpp"

#include <cmath>
#include <vector>

#include "polystokes/errors.hpp"
#include "polystokes/quadrature.hpp"

namespace polystokes {

namespace {

// Shared graded exponent table (ax+ay = d blocks, ay ascending inside a block).
const std::array<int, 2>& exponent_entry(int i) {
  static const std::vector<std::array<int, 2>> table = [] {
    std::vector<std::array<int, 2>> t;
    for (int d = 0; d <= 64; ++d)
      for (int ay = 0; ay <= d; ++ay) t.push_back({d - ay, ay});
    return t;
  }();
  return table[static_cast<std::size_t>(i)];
}

int exponent_index(int ax, int ay) {
  const int d = ax + ay;
  return d * (d + 1) / 2 + ay;
}

}  // namespace

int p_dim(int s) { return s < 0 ? 0 : (s + 1) * (s + 2) / 2; }

int p_degree_of_dim(int dim) {
  for (int s = -1; s <= 64; ++s)
    if (p_dim(s) == dim) return s;
  throw RankError("coefficient vector of size " + std::to_string(dim) +
                  " is not a full graded basis");
}

std::array<int, 2> p_exponent(int i) { return exponent_entry(i); }

Eigen::VectorXd poly_dx(const Eigen::VectorXd& c, double h) {
  const int s = p_degree_of_dim(static_cast<int>(c.size()));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(p_dim(s - 1));
  for (int i = 0; i < c.size(); ++i) {
    const auto [ax, ay] = exponent_entry(i);
    if (ax > 0) d(exponent_index(ax - 1, ay)) += ax / h * c(i);
  }
  return d;
}

Eigen::VectorXd poly_dy(const Eigen::VectorXd& c, double h) {
  const int s = p_degree_of_dim(static_cast<int>(c.size()));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(p_dim(s - 1));
  for (int i = 0; i < c.size(); ++i) {
    const auto [ax, ay] = exponent_entry(i);
    if (ay > 0) d(exponent_index(ax, ay - 1)) += ay / h * c(i);
  }
  return d;
}

Eigen::VectorXd poly_gradient(const Eigen::VectorXd& scalar_c, double h) {
  const Eigen::VectorXd dx = poly_dx(scalar_c, h);
  const Eigen::VectorXd dy = poly_dy(scalar_c, h);
  Eigen::VectorXd g(2 * dx.size());
  for (int i = 0; i < dx.size(); ++i) {
    g(2 * i) = dx(i);
    g(2 * i + 1) = dy(i);
  }
  return g;
}

Eigen::VectorXd poly_divergence(const Eigen::VectorXd& vec_c, double h) {
  const int n = static_cast<int>(vec_c.size()) / 2;
  Eigen::VectorXd cx(n), cy(n);
  for (int i = 0; i < n; ++i) {
    cx(i) = vec_c(2 * i);
    cy(i) = vec_c(2 * i + 1);
  }
  return poly_dx(cx, h) + poly_dy(cy, h);
}

Eigen::VectorXd poly_vector_laplacian(const Eigen::VectorXd& vec_c, double h) {
  const int n = static_cast<int>(vec_c.size()) / 2;
  Eigen::VectorXd cx(n), cy(n);
  for (int i = 0; i < n; ++i) {
    cx(i) = vec_c(2 * i);
    cy(i) = vec_c(2 * i + 1);
  }
  auto lap = [&](const Eigen::VectorXd& c) {
    return (poly_dx(poly_dx(c, h), h) + poly_dy(poly_dy(c, h), h)).eval();
  };
  const Eigen::VectorXd lx = lap(cx), ly = lap(cy);
  Eigen::VectorXd out(2 * lx.size());
  for (int i = 0; i < lx.size(); ++i) {
    out(2 * i) = lx(i);
    out(2 * i + 1) = ly(i);
  }
  return out;
}

namespace {

Eigen::VectorXd monomial_values(const Vec2& center, double h, int dim, const Vec2& x) {
  const double xs = (x.x() - center.x()) / h;
  const double ys = (x.y() - center.y()) / h;
  const int smax = p_degree_of_dim(dim);
  std::vector<double> px(static_cast<std::size_t>(smax) + 1, 1.0), py(static_cast<std::size_t>(smax) + 1, 1.0);
  for (int i = 1; i <= smax; ++i) {
    px[static_cast<std::size_t>(i)] = px[static_cast<std::size_t>(i - 1)] * xs;
    py[static_cast<std::size_t>(i)] = py[static_cast<std::size_t>(i - 1)] * ys;
  }
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    const auto [ax, ay] = exponent_entry(i);
    v(i) = px[static_cast<std::size_t>(ax)] * py[static_cast<std::size_t>(ay)];
  }
  return v;
}

}  // namespace

double poly_eval(const Eigen::VectorXd& scalar_c, const Vec2& center, double h, const Vec2& x) {
  return monomial_values(center, h, static_cast<int>(scalar_c.size()), x).dot(scalar_c);
}

Vec2 poly_eval_vec(const Eigen::VectorXd& vec_c, const Vec2& center, double h, const Vec2& x) {
  const int n = static_cast<int>(vec_c.size()) / 2;
  const Eigen::VectorXd m = monomial_values(center, h, n, x);
  Vec2 out(0.0, 0.0);
  for (int i = 0; i < n; ++i) {
    out.x() += vec_c(2 * i) * m(i);
    out.y() += vec_c(2 * i + 1) * m(i);
  }
  return out;
}

void cell_quadrature(const PolygonalMesh& mesh, int cell, int exactness, std::vector<Vec2>& points,
                     Eigen::VectorXd& weights) {
  const QuadratureRule& ref = triangle_rule(exactness);
  const SubTriangulation& sub = mesh.subtriangulation(cell);
  const int per = ref.size();
  const int total = per * static_cast<int>(sub.triangles.size());
  points.resize(static_cast<std::size_t>(total));
  weights.resize(total);
  int at = 0;
  for (const auto& tri : sub.triangles) {
    const Vec2 a = mesh.subtri_point(cell, tri[0]);
    const Vec2 b = mesh.subtri_point(cell, tri[1]);
    const Vec2 c = mesh.subtri_point(cell, tri[2]);
    const double jac = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    for (int q = 0; q < per; ++q) {
      const double u = ref.points(q, 0), v = ref.points(q, 1);
      points[static_cast<std::size_t>(at)] = a + u * (b - a) + v * (c - a);
      weights(at) = ref.weights(q) * jac;  // jac = 2*area, reference measure 1/2
      ++at;
    }
  }
}

double integrate_on_cell(const PolygonalMesh& mesh, int cell,
                         const std::function<double(const Vec2&)>& integrand, int exactness) {
  std::vector<Vec2> pts;
  Eigen::VectorXd w;
  cell_quadrature(mesh, cell, exactness, pts, w);
  double sum = 0.0;
  for (int q = 0; q < w.size(); ++q) sum += w(q) * integrand(pts[static_cast<std::size_t>(q)]);
  return sum;
}

CellFrame::CellFrame(const PolygonalMesh& mesh, int cell, int max_degree, int exactness)
    : cell_(cell), max_degree_(max_degree) {
  const CellGeometry& g = mesh.geometry(cell);
  center_ = g.centroid;
  h_ = g.diameter;
  area_ = g.area;
  cell_quadrature(mesh, cell, exactness, qp_, qw_);
  const int dim = p_dim(max_degree);
  mono_.resize(static_cast<Eigen::Index>(qp_.size()), dim);
  for (std::size_t q = 0; q < qp_.size(); ++q)
    mono_.row(static_cast<Eigen::Index>(q)) = monomial_values(center_, h_, dim, qp_[q]).transpose();
  gram_full_ = mono_.transpose() * qw_.asDiagonal() * mono_;
}

Eigen::VectorXd CellFrame::monomials_at(const Vec2& x, int dim) const {
  return monomial_values(center_, h_, dim, x);
}

Eigen::MatrixXd CellFrame::scalar_gram(int s) const {
  const int d = p_dim(s);
  return gram_full_.topLeftCorner(d, d);
}

Eigen::MatrixXd CellFrame::vector_gram(int s) const {
  const int d = p_dim(s);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      G(2 * i, 2 * j) = gram_full_(i, j);
      G(2 * i + 1, 2 * j + 1) = gram_full_(i, j);
    }
  return G;
}

Eigen::MatrixXd CellFrame::orthonormal_scalar(int s) const {
  const Eigen::MatrixXd G = scalar_gram(s);
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw RankError("scalar Gram of degree " + std::to_string(s) + " is not positive definite");
  // columns of L^{-T}: p_j spans m_0..m_j, so p_0 is the normalized constant
  const int d = p_dim(s);
  return llt.matrixU().solve(Eigen::MatrixXd::Identity(d, d));
}

double CellFrame::integrate_scalar(const Eigen::VectorXd& c) const {
  return monomial_integrals(static_cast<int>(c.size())).dot(c);
}

Eigen::VectorXd CellFrame::monomial_integrals(int dim) const {
  return gram_full_.col(0).head(dim);  // m_0 == 1
}

Eigen::VectorXd CellFrame::values_at_q(const Eigen::VectorXd& scalar_c) const {
  return mono_.leftCols(scalar_c.size()) * scalar_c;
}

int gperp_dim(int s) { return s < 0 ? 0 : 2 * p_dim(s) - p_dim(s + 1) + 1; }

GPerpBasis gperp_basis(const CellFrame& frame, int s) {
  GPerpBasis basis;
  basis.degree = s;
  if (s < 0) {
    basis.coef.resize(0, 0);
    return basis;
  }
  const int dv = 2 * p_dim(s);
  const int ngrad = p_dim(s + 1) - 1;

  // columns: gradients of the non-constant P_{s+1} monomials
  Eigen::MatrixXd D(dv, ngrad);
  for (int j = 0; j < ngrad; ++j) {
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(p_dim(s + 1));
    mono(j + 1) = 1.0;
    D.col(j) = poly_gradient(mono, frame.h());
  }

  const Eigen::MatrixXd H = frame.vector_gram(s);
  const Eigen::MatrixXd M = D.transpose() * H;  // ngrad x dv
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  const int expected = gperp_dim(s);
  if (expected == 0) {
    basis.coef.resize(dv, 0);
    return basis;
  }
  if (kernel.cols() != expected)
    throw RankError("G_perp dimension mismatch: got " + std::to_string(kernel.cols()) +
                    ", expected " + std::to_string(expected));

  // L2(K)-orthonormalize and fix signs so tests are deterministic.
  const Eigen::MatrixXd small = kernel.transpose() * H * kernel;
  const Eigen::LLT<Eigen::MatrixXd> llt(small);
  if (llt.info() != Eigen::Success) throw RankError("G_perp Gram not positive definite");
  Eigen::MatrixXd coef =
      kernel * llt.matrixU().solve(Eigen::MatrixXd::Identity(expected, expected));
  for (int j = 0; j < coef.cols(); ++j) {
    const double m = coef.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < coef.rows(); ++i) {
      if (std::abs(coef(i, j)) > 1e-8 * m) {
        if (coef(i, j) < 0) coef.col(j) = -coef.col(j);
        break;
      }
    }
  }
  basis.coef = coef;
  return basis;
}

PolyDecomposition decompose_poly(const CellFrame& frame, const Eigen::VectorXd& vec_c) {
  const int s = p_degree_of_dim(static_cast<int>(vec_c.size()) / 2);
  PolyDecomposition out;
  if (s < 0) {
    out.gradient_potential = Eigen::VectorXd::Zero(1);
    out.perp_part = vec_c;
    return out;
  }
  const int dv = 2 * p_dim(s);
  const int ngrad = p_dim(s + 1) - 1;
  const GPerpBasis perp = gperp_basis(frame, s);

  Eigen::MatrixXd A(dv, ngrad + perp.dim());
  for (int j = 0; j < ngrad; ++j) {
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(p_dim(s + 1));
    mono(j + 1) = 1.0;
    A.col(j) = poly_gradient(mono, frame.h());
  }
  A.rightCols(perp.dim()) = perp.coef;
  const Eigen::VectorXd sol = A.fullPivLu().solve(vec_c);

  Eigen::VectorXd r = Eigen::VectorXd::Zero(p_dim(s + 1));
  r.tail(ngrad) = sol.head(ngrad);
  r(0) = -frame.integrate_scalar(r) / frame.area();  // zero mean on K

  out.gradient_potential = r;
  out.perp_part = perp.coef * sol.tail(perp.dim());
  return out;
}

}  // namespace polystokes
