#include "polystokes/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "polystokes/errors.hpp"
#include "polystokes/quadrature.hpp"

namespace polystokes {

namespace {

// quadrature points of a reference rule mapped to one physical triangle
void map_rule(const QuadratureRule& rule, const Vec2& a, const Vec2& b, const Vec2& c,
              std::vector<Vec2>& pts, Eigen::VectorXd& w) {
  const double jac = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  pts.resize(static_cast<std::size_t>(rule.size()));
  w.resize(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    pts[static_cast<std::size_t>(q)] =
        a + rule.points(q, 0) * (b - a) + rule.points(q, 1) * (c - a);
    w(q) = rule.weights(q) * jac;
  }
}

Eigen::VectorXd mono_values(const Vec2& center, double h, int dim, const Vec2& x) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  // reuse poly_eval machinery through unit coefficients is wasteful; inline
  const double xs = (x.x() - center.x()) / h;
  const double ys = (x.y() - center.y()) / h;
  for (int i = 0; i < dim; ++i) {
    const auto [ax, ay] = p_exponent(i);
    c(i) = std::pow(xs, ax) * std::pow(ys, ay);
  }
  return c;
}

}  // namespace

RTSpace::RTSpace(const PolygonalMesh& mesh, int cell, int m) : cell_(cell), m_(m) {
  if (m < 0) throw OrderTooHigh("RT order must be nonnegative");
  const SubTriangulation& sub = mesh.subtriangulation(cell);
  const auto& loop = mesh.cell(cell);

  // local vertex ids, ascending in mesh id so canonical sub-edge directions
  // agree with the mesh's canonical edge directions
  std::vector<int> ids;
  for (const auto& t : sub.triangles)
    for (int v : t) ids.push_back(v);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::map<int, int> to_local;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    to_local[ids[i]] = static_cast<int>(i);
    points_.push_back(mesh.subtri_point(cell, ids[i]));
  }

  tris_.reserve(sub.triangles.size());
  for (const auto& t : sub.triangles)
    tris_.push_back({to_local.at(t[0]), to_local.at(t[1]), to_local.at(t[2])});

  // unique sub-edges with adjacency
  std::map<std::pair<int, int>, int> edge_ids;
  tri_edges_.resize(tris_.size());
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    for (int s = 0; s < 3; ++s) {
      const int va = tris_[t][static_cast<std::size_t>(s)];
      const int vb = tris_[t][static_cast<std::size_t>((s + 1) % 3)];
      const auto key = std::minmax(va, vb);
      auto it = edge_ids.find(key);
      int e;
      if (it == edge_ids.end()) {
        e = static_cast<int>(edges_.size());
        edge_ids.emplace(key, e);
        SubEdge se;
        se.a = key.first;
        se.b = key.second;
        se.pa = points_[static_cast<std::size_t>(se.a)];
        se.pb = points_[static_cast<std::size_t>(se.b)];
        const Vec2 tv = (se.pb - se.pa);
        se.length = tv.norm();
        se.normal = Vec2(tv.y(), -tv.x()) / se.length;
        se.tris[0] = static_cast<int>(t);
        edges_.push_back(se);
      } else {
        e = it->second;
        edges_[static_cast<std::size_t>(e)].tris[1] = static_cast<int>(t);
      }
      tri_edges_[t][static_cast<std::size_t>(s)] = e;
    }
  }
  for (std::size_t j = 0; j < loop.size(); ++j) {
    const auto key = std::minmax(to_local.at(loop[j]), to_local.at(loop[(j + 1) % loop.size()]));
    edges_[static_cast<std::size_t>(edge_ids.at(key))].polygon_side = static_cast<int>(j);
  }

  edge_dof_count_ = (m_ + 1) * num_sub_edges();
  interior_per_tri_ = 2 * p_dim(m_ - 1);
  n_dofs_ = edge_dof_count_ + interior_per_tri_ * num_triangles();

  // Generators, identical coefficient layout on every triangle's scaled
  // frame: P_m^2 monomials plus hom_m(xhat) * xhat of degree m+1.
  const int gdim = gen_dim();
  const int nc = p_dim(m_ + 1);
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(2 * nc, gdim);
  for (int i = 0; i < p_dim(m_); ++i)
    for (int c = 0; c < 2; ++c) gen(2 * i + c, 2 * i + c) = 1.0;
  auto mono_index = [](int ax, int ay) {
    const int d = ax + ay;
    return d * (d + 1) / 2 + ay;
  };
  for (int t = 0; t <= m_; ++t) {
    const auto [ax, ay] = p_exponent(p_dim(m_ - 1) + t);
    const int g = 2 * p_dim(m_) + t;
    gen(2 * mono_index(ax + 1, ay), g) = 1.0;
    gen(2 * mono_index(ax, ay + 1) + 1, g) = 1.0;
  }

  const QuadratureRule& vol_rule = triangle_rule(2 * (m_ + 1) + 2);
  const QuadratureRule& ed_rule = edge_rule(2 * m_ + 2);

  tri_data_.resize(tris_.size());
  mass_ = Eigen::MatrixXd::Zero(n_dofs_, n_dofs_);
  const int div_rows_per_tri = p_dim(m_);
  div_rows_ = Eigen::MatrixXd::Zero(div_rows_per_tri * num_triangles(), n_dofs_);

  for (std::size_t t = 0; t < tris_.size(); ++t) {
    TriData& td = tri_data_[t];
    const Vec2 a = points_[static_cast<std::size_t>(tris_[t][0])];
    const Vec2 b = points_[static_cast<std::size_t>(tris_[t][1])];
    const Vec2 c = points_[static_cast<std::size_t>(tris_[t][2])];
    td.center = (a + b + c) / 3.0;
    td.h = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    td.area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());

    // local dofs: the three edges' moments then the interior moments
    const int ndof_t = 3 * (m_ + 1) + interior_per_tri_;
    td.global.resize(static_cast<std::size_t>(ndof_t));
    Eigen::MatrixXd dofmat = Eigen::MatrixXd::Zero(ndof_t, gdim);

    std::vector<Vec2> qp;
    Eigen::VectorXd qw;
    map_rule(vol_rule, a, b, c, qp, qw);

    int row = 0;
    for (int s = 0; s < 3; ++s) {
      const SubEdge& se = edges_[static_cast<std::size_t>(tri_edges_[t][static_cast<std::size_t>(s)])];
      for (int l = 0; l <= m_; ++l, ++row) {
        td.global[static_cast<std::size_t>(row)] =
            edge_dof(tri_edges_[t][static_cast<std::size_t>(s)], l);
        for (int q = 0; q < ed_rule.size(); ++q) {
          const double xi = ed_rule.points(q, 0);
          const Vec2 x = se.pa + 0.5 * (xi + 1.0) * (se.pb - se.pa);
          const double w = 0.5 * ed_rule.weights(q) * se.length / se.length;  // 1/|E| normalized
          const Eigen::VectorXd mono = mono_values(td.center, td.h, nc, x);
          const double leg = legendre_value(l, xi);
          for (int g = 0; g < gdim; ++g) {
            double vx = 0.0, vy = 0.0;
            for (int i = 0; i < nc; ++i) {
              vx += gen(2 * i, g) * mono(i);
              vy += gen(2 * i + 1, g) * mono(i);
            }
            dofmat(row, g) += w * leg * (vx * se.normal.x() + vy * se.normal.y());
          }
        }
      }
    }
    for (int i = 0; i < p_dim(m_ - 1); ++i) {
      for (int cmp = 0; cmp < 2; ++cmp, ++row) {
        td.global[static_cast<std::size_t>(row)] = interior_dof(static_cast<int>(t), 2 * i + cmp);
        for (int q = 0; q < qw.size(); ++q) {
          const Eigen::VectorXd mono = mono_values(td.center, td.h, nc, qp[static_cast<std::size_t>(q)]);
          for (int g = 0; g < gdim; ++g) {
            double v = 0.0;
            for (int ii = 0; ii < nc; ++ii) v += gen(2 * ii + cmp, g) * mono(ii);
            dofmat(row, g) += qw(q) * v * mono(i) / td.area;
          }
        }
      }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(dofmat);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
      throw RankError("RT dof matrix singular on cell " + std::to_string(cell) + " triangle " +
                      std::to_string(t));
    td.dual = lu.inverse();

    // divergence coefficients of the generators on this triangle
    td.div_coef.resize(p_dim(m_), gdim);
    for (int g = 0; g < gdim; ++g)
      td.div_coef.col(g) = poly_divergence(gen.col(g), td.h);

    // local mass and divergence rows, scattered to global dofs
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(gdim, gdim);
    Eigen::MatrixXd mono_q(qw.size(), nc);
    for (int q = 0; q < qw.size(); ++q)
      mono_q.row(q) = mono_values(td.center, td.h, nc, qp[static_cast<std::size_t>(q)]).transpose();
    const Eigen::MatrixXd sg = mono_q.transpose() * qw.asDiagonal() * mono_q;  // scalar gram deg m+1
    for (int g1 = 0; g1 < gdim; ++g1)
      for (int g2 = 0; g2 < gdim; ++g2) {
        double sum = 0.0;
        for (int i = 0; i < nc; ++i)
          for (int j = 0; j < nc; ++j)
            sum += sg(i, j) * (gen(2 * i, g1) * gen(2 * j, g2) + gen(2 * i + 1, g1) * gen(2 * j + 1, g2));
        gram(g1, g2) = sum;
      }
    const Eigen::MatrixXd mass_t = td.dual.transpose() * gram * td.dual;
    for (int i = 0; i < ndof_t; ++i)
      for (int j = 0; j < ndof_t; ++j)
        mass_(td.global[static_cast<std::size_t>(i)], td.global[static_cast<std::size_t>(j)]) +=
            mass_t(i, j);

    // int_T div(phi_d) m_i for m_i the scaled P_m(T) monomials
    const Eigen::MatrixXd div_vals = sg.topLeftCorner(p_dim(m_), p_dim(m_));
    const Eigen::MatrixXd rows = div_vals * td.div_coef * td.dual;  // p_dim(m) x ndof_t
    for (int i = 0; i < p_dim(m_); ++i)
      for (int j = 0; j < ndof_t; ++j)
        div_rows_(static_cast<int>(t) * div_rows_per_tri + i,
                  td.global[static_cast<std::size_t>(j)]) += rows(i, j);
  }
}

Vec2 RTSpace::eval(const Eigen::VectorXd& coef, int t, const Vec2& x) const {
  const TriData& td = tri_data_[static_cast<std::size_t>(t)];
  const int gdim = gen_dim();
  const int nc = p_dim(m_ + 1);
  Eigen::VectorXd local(td.global.size());
  for (std::size_t i = 0; i < td.global.size(); ++i) local(static_cast<Eigen::Index>(i)) = coef(td.global[i]);
  const Eigen::VectorXd gcoef = td.dual * local;
  const Eigen::VectorXd mono = mono_values(td.center, td.h, nc, x);
  // generator layout: see constructor
  Vec2 out(0.0, 0.0);
  for (int g = 0; g < gdim; ++g) {
    if (g < 2 * p_dim(m_)) {
      const int i = g / 2, c = g % 2;
      out(c) += gcoef(g) * mono(i);
    } else {
      const int tmono = g - 2 * p_dim(m_);
      const auto [ax, ay] = p_exponent(p_dim(m_ - 1) + tmono);
      const int d = ax + ay;
      (void)d;
      auto mono_index = [](int a2, int b2) {
        const int dd = a2 + b2;
        return dd * (dd + 1) / 2 + b2;
      };
      out.x() += gcoef(g) * mono(mono_index(ax + 1, ay));
      out.y() += gcoef(g) * mono(mono_index(ax, ay + 1));
    }
  }
  return out;
}

double RTSpace::eval_div(const Eigen::VectorXd& coef, int t, const Vec2& x) const {
  const TriData& td = tri_data_[static_cast<std::size_t>(t)];
  Eigen::VectorXd local(td.global.size());
  for (std::size_t i = 0; i < td.global.size(); ++i) local(static_cast<Eigen::Index>(i)) = coef(td.global[i]);
  const Eigen::VectorXd dc = td.div_coef * (td.dual * local);
  return poly_eval(dc, td.center, td.h, x);
}

Eigen::VectorXd RTSpace::dof_values(const std::function<Vec2(const Vec2&)>& f,
                                    int volume_exactness, int edge_exactness) const {
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(n_dofs_);
  const QuadratureRule& er = edge_rule(std::min(edge_exactness, 20));
  for (int e = 0; e < num_sub_edges(); ++e) {
    const SubEdge& se = edges_[static_cast<std::size_t>(e)];
    for (int l = 0; l <= m_; ++l) {
      double v = 0.0;
      for (int q = 0; q < er.size(); ++q) {
        const double xi = er.points(q, 0);
        const Vec2 x = se.pa + 0.5 * (xi + 1.0) * (se.pb - se.pa);
        v += 0.5 * er.weights(q) * legendre_value(l, xi) * f(x).dot(se.normal);
      }
      dofs(edge_dof(e, l)) = v;  // already normalized: weights sum to 1
    }
  }
  const QuadratureRule& vr = triangle_rule(std::min(volume_exactness, 20));
  for (int t = 0; t < num_triangles(); ++t) {
    const TriData& td = tri_data_[static_cast<std::size_t>(t)];
    std::vector<Vec2> qp;
    Eigen::VectorXd qw;
    map_rule(vr, points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][0])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][1])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][2])], qp, qw);
    for (int i = 0; i < p_dim(m_ - 1); ++i) {
      for (int cmp = 0; cmp < 2; ++cmp) {
        double v = 0.0;
        for (int q = 0; q < qw.size(); ++q) {
          const Vec2 x = qp[static_cast<std::size_t>(q)];
          v += qw(q) * f(x)(cmp) * poly_eval(Eigen::VectorXd::Unit(p_dim(m_ - 1), i), td.center, td.h, x);
        }
        dofs(interior_dof(t, 2 * i + cmp)) = v / td.area;
      }
    }
  }
  return dofs;
}

Eigen::VectorXd RTSpace::load_moments(const std::function<Vec2(const Vec2&)>& f,
                                      int exactness) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_dofs_);
  const QuadratureRule& vr = triangle_rule(std::min(exactness, 20));
  const int nc = p_dim(m_ + 1);
  for (int t = 0; t < num_triangles(); ++t) {
    const TriData& td = tri_data_[static_cast<std::size_t>(t)];
    std::vector<Vec2> qp;
    Eigen::VectorXd qw;
    map_rule(vr, points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][0])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][1])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][2])], qp, qw);
    const int ndof_t = static_cast<int>(td.global.size());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ndof_t);
    for (int q = 0; q < qw.size(); ++q) {
      const Vec2 x = qp[static_cast<std::size_t>(q)];
      const Vec2 fv = f(x);
      const Eigen::VectorXd mono = mono_values(td.center, td.h, nc, x);
      // generator values dotted with f
      Eigen::VectorXd genf(gen_dim());
      for (int g = 0; g < gen_dim(); ++g) {
        if (g < 2 * p_dim(m_)) {
          const int i = g / 2, c = g % 2;
          genf(g) = mono(i) * fv(c);
        } else {
          const int tm = g - 2 * p_dim(m_);
          const auto [ax, ay] = p_exponent(p_dim(m_ - 1) + tm);
          auto mono_index = [](int a2, int b2) {
            const int dd = a2 + b2;
            return dd * (dd + 1) / 2 + b2;
          };
          genf(g) = mono(mono_index(ax + 1, ay)) * fv.x() + mono(mono_index(ax, ay + 1)) * fv.y();
        }
      }
      acc += qw(q) * (td.dual.transpose() * genf);
    }
    for (int j = 0; j < ndof_t; ++j) out(td.global[static_cast<std::size_t>(j)]) += acc(j);
  }
  return out;
}

Eigen::MatrixXd RTSpace::poly_cross_mass(const CellFrame& frame, int deg) const {
  const int cols = 2 * p_dim(deg);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_dofs_, cols);
  const QuadratureRule& vr = triangle_rule(std::min(m_ + 1 + deg + 2, 20));
  const int nc = p_dim(m_ + 1);
  for (int t = 0; t < num_triangles(); ++t) {
    const TriData& td = tri_data_[static_cast<std::size_t>(t)];
    std::vector<Vec2> qp;
    Eigen::VectorXd qw;
    map_rule(vr, points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][0])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][1])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][2])], qp, qw);
    const int ndof_t = static_cast<int>(td.global.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ndof_t, cols);
    for (int q = 0; q < qw.size(); ++q) {
      const Vec2 x = qp[static_cast<std::size_t>(q)];
      const Eigen::VectorXd mono = mono_values(td.center, td.h, nc, x);
      const Eigen::VectorXd cmono = frame.monomials_at(x, p_dim(deg));
      Eigen::VectorXd genx(gen_dim()), geny(gen_dim());
      for (int g = 0; g < gen_dim(); ++g) {
        if (g < 2 * p_dim(m_)) {
          const int i = g / 2, c = g % 2;
          genx(g) = c == 0 ? mono(i) : 0.0;
          geny(g) = c == 1 ? mono(i) : 0.0;
        } else {
          const int tm = g - 2 * p_dim(m_);
          const auto [ax, ay] = p_exponent(p_dim(m_ - 1) + tm);
          auto mono_index = [](int a2, int b2) {
            const int dd = a2 + b2;
            return dd * (dd + 1) / 2 + b2;
          };
          genx(g) = mono(mono_index(ax + 1, ay));
          geny(g) = mono(mono_index(ax, ay + 1));
        }
      }
      const Eigen::VectorXd phix = td.dual.transpose() * genx;
      const Eigen::VectorXd phiy = td.dual.transpose() * geny;
      for (int i = 0; i < p_dim(deg); ++i) {
        acc.col(2 * i) += qw(q) * cmono(i) * phix;
        acc.col(2 * i + 1) += qw(q) * cmono(i) * phiy;
      }
    }
    for (int j = 0; j < ndof_t; ++j) out.row(td.global[static_cast<std::size_t>(j)]) += acc.row(j);
  }
  return out;
}

Eigen::VectorXd RTSpace::divergence_targets(const CellFrame& frame,
                                            const Eigen::VectorXd& div_c) const {
  const int per = p_dim(m_);
  Eigen::VectorXd out(per * num_triangles());
  const int ddeg = p_degree_of_dim(static_cast<int>(div_c.size()));
  const QuadratureRule& vr = triangle_rule(std::min(ddeg + m_ + 2, 20));
  for (int t = 0; t < num_triangles(); ++t) {
    const TriData& td = tri_data_[static_cast<std::size_t>(t)];
    std::vector<Vec2> qp;
    Eigen::VectorXd qw;
    map_rule(vr, points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][0])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][1])],
             points_[static_cast<std::size_t>(tris_[static_cast<std::size_t>(t)][2])], qp, qw);
    for (int i = 0; i < per; ++i) {
      double v = 0.0;
      for (int q = 0; q < qw.size(); ++q) {
        const Vec2 x = qp[static_cast<std::size_t>(q)];
        v += qw(q) * poly_eval(div_c, frame.center(), frame.h(), x) *
             poly_eval(Eigen::VectorXd::Unit(per, i), td.center, td.h, x);
      }
      out(t * per + i) = v;
    }
  }
  return out;
}

Eigen::VectorXd rt_interpolate_polynomial(const RTSpace& space, const CellFrame& frame,
                                          const Eigen::VectorXd& vec_c) {
  const int dq = p_degree_of_dim(static_cast<int>(vec_c.size()) / 2);
  auto f = [&](const Vec2& x) { return poly_eval_vec(vec_c, frame.center(), frame.h(), x); };
  return space.dof_values(f, dq + space.order() + 2, dq + space.order() + 2);
}

// ---------------------------------------------------------------------------
// ReconstructionOperator

ReconstructionOperator::ReconstructionOperator(const PolygonalMesh& mesh, const CellContext& ctx,
                                               int m)
    : ctx_(&ctx), space_(mesh, ctx.cell(), m) {
  const int k = ctx.layout().k();
  if (m > k - 1)
    throw OrderTooHigh("reconstruction order m = " + std::to_string(m) +
                       " exceeds k-1 = " + std::to_string(k - 1));
  const CellFrame& frame = ctx.frame();
  const int nloc = ctx.n_local();
  const int dim = space_.dim();
  const int n_sides = ctx.n_vertices();

  // (a) divergence moments per triangle against P_m(T)
  const Eigen::MatrixXd div_rows = space_.divergence_rows();
  const int n_div = static_cast<int>(div_rows.rows());
  // target map: dofs -> int_T div(v) m_i, assembled through the orthonormal
  // divergence coefficients
  const int nkm1 = p_dim(k - 1);
  Eigen::MatrixXd div_targets(n_div, nkm1);
  for (int l = 0; l < nkm1; ++l)
    div_targets.col(l) = space_.divergence_targets(frame, ctx.orthonormal_pressure().col(l));

  // (b) cell moments against G_{m-1}^perp
  const GPerpBasis gm = gperp_basis(frame, m - 1);
  const int n_gperp = gm.dim();
  Eigen::MatrixXd gperp_rows(n_gperp, dim);
  Eigen::MatrixXd gperp_dofmap(n_gperp, nloc);
  if (n_gperp > 0) {
    const Eigen::MatrixXd cross = space_.poly_cross_mass(frame, m - 1);
    const int pad = 2 * p_dim(k - 2);
    for (int l = 0; l < n_gperp; ++l) {
      gperp_rows.row(l) = (cross * gm.coef.col(l)).transpose();
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nloc);
      for (int i = 0; i < gm.coef.rows() && i < pad; ++i)
        if (gm.coef(i, l) != 0.0) row += gm.coef(i, l) * ctx.moments_km2().row(i);
      gperp_dofmap.row(l) = row;
    }
  }

  // (c) boundary normal-flux moments, one block per polygon side, in the
  // canonical Legendre form the RT edge DOFs already use
  const int n_flux = n_sides * (m + 1);
  Eigen::MatrixXd flux_rows = Eigen::MatrixXd::Zero(n_flux, dim);
  Eigen::MatrixXd flux_dofmap = Eigen::MatrixXd::Zero(n_flux, nloc);
  {
    std::vector<int> side_to_edge(static_cast<std::size_t>(n_sides), -1);
    for (int e = 0; e < space_.num_sub_edges(); ++e) {
      const int side = space_.sub_edges()[static_cast<std::size_t>(e)].polygon_side;
      if (side >= 0) side_to_edge[static_cast<std::size_t>(side)] = e;
    }
    for (int j = 0; j < n_sides; ++j) {
      const int e = side_to_edge[static_cast<std::size_t>(j)];
      const RTSpace::SubEdge& se = space_.sub_edges()[static_cast<std::size_t>(e)];
      const Vec2 dir = (se.pb - se.pa) / se.length;
      for (int l = 0; l <= m; ++l) {
        const int r = j * (m + 1) + l;
        flux_rows(r, space_.edge_dof(e, l)) = 1.0;
        flux_dofmap.row(r) = ctx.side_functional(j, [&](const Vec2& x) {
          const double xi = 2.0 * (x - se.pa).dot(dir) / se.length - 1.0;
          return Vec2(legendre_value(l, xi) * se.normal / se.length);
        });
      }
    }
  }

  constraint_rows_.resize(n_div + n_gperp + n_flux, dim);
  constraint_rows_ << div_rows, gperp_rows, flux_rows;
  constraint_dofmap_.resize(n_div + n_gperp + n_flux, nloc);
  constraint_dofmap_ << div_targets * ctx.divergence_matrix(), gperp_dofmap, flux_dofmap;

  objective_dofmap_ = space_.poly_cross_mass(frame, k) * ctx.gradient_projector();

  // The divergence and flux blocks overlap in the total-flux compatibility
  // row; a rank-revealing QR of C^T picks an independent subset.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(constraint_rows_.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  kept_rows_.resize(static_cast<std::size_t>(rank));
  const auto perm = qr.colsPermutation().indices();
  for (int i = 0; i < rank; ++i) kept_rows_[static_cast<std::size_t>(i)] = perm(i);

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + rank, dim + rank);
  kkt.topLeftCorner(dim, dim) = space_.mass();
  for (int i = 0; i < rank; ++i) {
    kkt.block(dim + i, 0, 1, dim) = constraint_rows_.row(kept_rows_[static_cast<std::size_t>(i)]);
    kkt.block(0, dim + i, dim, 1) =
        constraint_rows_.row(kept_rows_[static_cast<std::size_t>(i)]).transpose();
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> kkt_lu(kkt);

  Eigen::MatrixXd rhs(dim + rank, nloc);
  rhs.topRows(dim) = objective_dofmap_;
  for (int i = 0; i < rank; ++i)
    rhs.row(dim + i) = constraint_dofmap_.row(kept_rows_[static_cast<std::size_t>(i)]);
  basis_ = kkt_lu.solve(rhs).topRows(dim);

  // feasibility of the full constraint set (Lemma-level guarantee)
  const Eigen::MatrixXd resid = constraint_rows_ * basis_ - constraint_dofmap_;
  const double scale = std::max(1.0, constraint_dofmap_.cwiseAbs().maxCoeff());
  if (resid.cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InfeasibleConstraints("reconstruction constraints violated on cell " +
                                std::to_string(ctx.cell()) + " by " +
                                std::to_string(resid.cwiseAbs().maxCoeff()));
}

ConstraintSet ReconstructionOperator::build_constraints(const Eigen::VectorXd& local_dofs) const {
  ConstraintSet set;
  set.C = constraint_rows_;
  set.g = constraint_dofmap_ * local_dofs;
  set.div_rows = static_cast<int>(space_.divergence_rows().rows());
  set.flux_rows = ctx_->n_vertices() * (space_.order() + 1);
  set.gperp_rows = static_cast<int>(constraint_rows_.rows()) - set.div_rows - set.flux_rows;
  return set;
}

Eigen::VectorXd ReconstructionOperator::reconstruct(const Eigen::VectorXd& local_dofs) const {
  const Eigen::VectorXd w = basis_ * local_dofs;
  const Eigen::VectorXd g = constraint_dofmap_ * local_dofs;
  const double viol = (constraint_rows_ * w - g).cwiseAbs().maxCoeff();
  if (viol > 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff()))
    throw InfeasibleConstraints("reconstruction constraints violated by " + std::to_string(viol));
  return w;
}

}  // namespace polystokes
