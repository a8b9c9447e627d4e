#include "polystokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "polystokes/errors.hpp"

namespace polystokes {

namespace {

double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

// Signed distance of p to the line through (a,b), positive on the left of a->b.
double line_signed_dist(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 t = b - a;
  return cross2(t, p - a) / t.norm();
}

}  // namespace

double ShapeReport::min_gamma1() const {
  return gamma1.empty() ? 0.0 : *std::min_element(gamma1.begin(), gamma1.end());
}
double ShapeReport::min_gamma2() const {
  return gamma2.empty() ? 0.0 : *std::min_element(gamma2.begin(), gamma2.end());
}

double polygon_area(const std::vector<Vec2>& loop) {
  double twice = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross2(loop[i], loop[(i + 1) % n]);
  return 0.5 * twice;
}

CellGeometry polygon_geometry(const std::vector<Vec2>& loop) {
  const std::size_t n = loop.size();
  CellGeometry g;
  double twice = 0.0;
  Vec2 cw = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % n];
    const double c = cross2(p, q);
    twice += c;
    cw += c * (p + q);
  }
  g.area = 0.5 * twice;
  g.centroid = cw / (3.0 * twice);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      g.diameter = std::max(g.diameter, (loop[i] - loop[j]).norm());
  g.edge_normals.resize(n);
  g.edge_lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 t = loop[(i + 1) % n] - loop[i];
    const double len = t.norm();
    g.edge_lengths[i] = len;
    g.edge_normals[i] = Vec2(t.y(), -t.x()) / len;  // outward for a CCW loop
  }
  return g;
}

PolygonalMesh::PolygonalMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                             int level)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), level_(level) {
  const int nv = num_vertices();
  std::map<std::pair<int, int>, int> edge_index;
  cell_edges_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& loop = cells_[static_cast<std::size_t>(c)];
    if (loop.size() < 3) throw TopologyError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv)
        throw TopologyError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));
    const double area = polygon_area(cell_loop(c));
    if (!(area > 0.0))
      throw TopologyError("cell " + std::to_string(c) + " is not counterclockwise / has nonpositive area");
    const std::size_t n = loop.size();
    auto& ce = cell_edges_[static_cast<std::size_t>(c)];
    ce.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int a = loop[i], b = loop[(i + 1) % n];
      if (a == b) throw TopologyError("cell " + std::to_string(c) + " repeats vertex " + std::to_string(a));
      const auto key = std::minmax(a, b);
      auto it = edge_index.find(key);
      int e;
      if (it == edge_index.end()) {
        e = num_edges();
        edge_index.emplace(key, e);
        MeshEdge me;
        me.a = key.first;
        me.b = key.second;
        me.cells[0] = c;
        edges_.push_back(me);
      } else {
        e = it->second;
        MeshEdge& me = edges_[static_cast<std::size_t>(e)];
        if (me.cells[1] >= 0)
          throw TopologyError("edge (" + std::to_string(me.a) + "," + std::to_string(me.b) +
                              ") is non-manifold (three adjacent cells)");
        me.cells[1] = c;
      }
      ce[i] = e;
    }
  }
  boundary_vertex_.assign(static_cast<std::size_t>(nv), false);
  for (const auto& e : edges_) {
    if (e.boundary()) {
      boundary_vertex_[static_cast<std::size_t>(e.a)] = true;
      boundary_vertex_[static_cast<std::size_t>(e.b)] = true;
    }
  }
  geometry_.reserve(cells_.size());
  subtri_.reserve(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    geometry_.push_back(polygon_geometry(cell_loop(c)));
    // subtriangulate() indexes the loop; stored triangles index mesh vertices,
    // with the star point (if any) as index num_vertices().
    SubTriangulation sub = subtriangulate(cell_loop(c), c);
    const auto& loop = cells_[static_cast<std::size_t>(c)];
    const int n = static_cast<int>(loop.size());
    for (auto& tri : sub.triangles)
      for (int& idx : tri) idx = idx < n ? loop[static_cast<std::size_t>(idx)] : nv;
    subtri_.push_back(std::move(sub));
  }
}

std::vector<Vec2> PolygonalMesh::cell_loop(int c) const {
  const auto& idx = cells_[static_cast<std::size_t>(c)];
  std::vector<Vec2> loop(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) loop[i] = vertices_[static_cast<std::size_t>(idx[i])];
  return loop;
}

Vec2 PolygonalMesh::subtri_point(int c, int idx) const {
  if (idx < num_vertices()) return vertices_[static_cast<std::size_t>(idx)];
  return *subtri_[static_cast<std::size_t>(c)].star_point;
}

double PolygonalMesh::mesh_size() const {
  double h = 0.0;
  for (const auto& g : geometry_) h = std::max(h, g.diameter);
  return h;
}

double PolygonalMesh::domain_area() const {
  double a = 0.0;
  for (const auto& g : geometry_) a += g.area;
  return a;
}

SubTriangulation subtriangulate(const std::vector<Vec2>& loop, int cell_id) {
  const int n = static_cast<int>(loop.size());
  SubTriangulation sub;
  sub.cell = cell_id;

  CellGeometry g = polygon_geometry(loop);
  const double tol = 1e-12 * g.diameter * g.diameter;

  // Fan from the first vertex that strictly sees every non-adjacent edge.
  for (int i = 0; i < n; ++i) {
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      if (j == i || (j + 1) % n == i) continue;
      const Vec2& a = loop[static_cast<std::size_t>(j)];
      const Vec2& b = loop[static_cast<std::size_t>((j + 1) % n)];
      if (cross2(a - loop[static_cast<std::size_t>(i)], b - loop[static_cast<std::size_t>(i)]) <= tol) ok = false;
    }
    if (ok) {
      for (int j = 0; j < n; ++j) {
        if (j == i || (j + 1) % n == i) continue;
        sub.triangles.push_back({i, j, (j + 1) % n});
      }
      return sub;
    }
  }

  // No vertex works: sample the star kernel for the deepest interior point.
  Vec2 lo = loop[0], hi = loop[0];
  for (const Vec2& p : loop) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  constexpr int kGrid = 64;
  double best_r = 0.0;
  Vec2 best = Vec2::Zero();
  auto consider = [&](const Vec2& p) {
    double r = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      r = std::min(r, line_signed_dist(loop[static_cast<std::size_t>(j)],
                                       loop[static_cast<std::size_t>((j + 1) % n)], p));
    if (r > best_r) {
      best_r = r;
      best = p;
    }
  };
  consider(g.centroid);
  for (int iy = 0; iy < kGrid; ++iy)
    for (int ix = 0; ix < kGrid; ++ix)
      consider(Vec2(lo.x() + (hi.x() - lo.x()) * (ix + 0.5) / kGrid,
                    lo.y() + (hi.y() - lo.y()) * (iy + 0.5) / kGrid));
  if (!(best_r > 0.0))
    throw NotStarShaped("cell " + std::to_string(cell_id) + " has no sampled star center");

  sub.star_point = best;
  for (int j = 0; j < n; ++j) sub.triangles.push_back({n, j, (j + 1) % n});
  return sub;
}

ShapeReport check_shape_regularity(const PolygonalMesh& mesh) {
  ShapeReport rep;
  rep.gamma1.resize(static_cast<std::size_t>(mesh.num_cells()));
  rep.gamma2.resize(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto loop = mesh.cell_loop(c);
    const auto& g = mesh.geometry(c);
    const int n = static_cast<int>(loop.size());

    Vec2 lo = loop[0], hi = loop[0];
    for (const Vec2& p : loop) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    constexpr int kGrid = 64;
    double best_r = 0.0;
    auto consider = [&](const Vec2& p) {
      double r = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j)
        r = std::min(r, line_signed_dist(loop[static_cast<std::size_t>(j)],
                                         loop[static_cast<std::size_t>((j + 1) % n)], p));
      best_r = std::max(best_r, r);
    };
    consider(g.centroid);
    if (mesh.subtriangulation(c).star_point) consider(*mesh.subtriangulation(c).star_point);
    for (int iy = 0; iy < kGrid; ++iy)
      for (int ix = 0; ix < kGrid; ++ix)
        consider(Vec2(lo.x() + (hi.x() - lo.x()) * (ix + 0.5) / kGrid,
                      lo.y() + (hi.y() - lo.y()) * (iy + 0.5) / kGrid));
    rep.gamma1[static_cast<std::size_t>(c)] = std::max(best_r, 0.0) / g.diameter;

    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        dmin = std::min(dmin, (loop[static_cast<std::size_t>(i)] - loop[static_cast<std::size_t>(j)]).norm());
    rep.gamma2[static_cast<std::size_t>(c)] = dmin / g.diameter;
  }
  return rep;
}

}  // namespace polystokes
