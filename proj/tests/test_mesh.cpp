#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "paper_fig1_data.hpp"
#include "polystokes/errors.hpp"
#include "polystokes/mesh.hpp"

using namespace polystokes;

namespace {

bool has_vertex(const PolygonalMesh& mesh, double x, double y) {
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.vertex(v).x() == x && mesh.vertex(v).y() == y) return true;
  return false;
}

// Exact vertex-set and edge-set comparison against the published tables.
void check_against_fig1(const PolygonalMesh& mesh, const std::vector<fig1::VertRow>& verts,
                        const std::vector<fig1::EdgeRow>& edges) {
  REQUIRE(mesh.num_vertices() == static_cast<int>(verts.size()));
  REQUIRE(mesh.num_edges() == static_cast<int>(edges.size()));

  // published index -> our index, keyed by exact coordinates
  std::map<std::pair<double, double>, int> ours;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    ours[{mesh.vertex(v).x(), mesh.vertex(v).y()}] = v;
  std::vector<int> remap(verts.size(), -1);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto it = ours.find({verts[i][0], verts[i][1]});
    REQUIRE_MESSAGE(it != ours.end(), "missing vertex (" << verts[i][0] << "," << verts[i][1] << ")");
    remap[i] = it->second;
  }

  std::set<std::pair<int, int>> ours_edges, published;
  for (const auto& e : mesh.edges()) ours_edges.insert(std::minmax(e.a, e.b));
  for (const auto& e : edges) published.insert(std::minmax(remap[static_cast<std::size_t>(e[0])],
                                                           remap[static_cast<std::size_t>(e[1])]));
  CHECK(ours_edges == published);
}

}  // namespace

TEST_CASE("level 0 reproduces the published mesh") {
  const PolygonalMesh mesh = build_paper_mesh(0);
  CHECK(mesh.num_cells() == 18);
  CHECK(has_vertex(mesh, 0.3, 0.3));
  CHECK(has_vertex(mesh, 0.125, 0.625));
  CHECK(has_vertex(mesh, 0.375, 0.875));
  check_against_fig1(mesh, fig1::kLevel0Vertices, fig1::kLevel0Edges);
}

TEST_CASE("level 1 reproduces the published mesh") {
  const PolygonalMesh mesh = build_paper_mesh(1);
  CHECK(has_vertex(mesh, 0.275, 0.275));
  CHECK(has_vertex(mesh, 0.0625, 0.5625));
  check_against_fig1(mesh, fig1::kLevel1Vertices, fig1::kLevel1Edges);
}

TEST_CASE("generated meshes satisfy the basic invariants") {
  for (int level = 0; level <= 3; ++level) {
    const PolygonalMesh mesh = build_paper_mesh(level);

    // positive cell areas, domain area 1
    double total = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      CHECK(mesh.geometry(c).area > 0.0);
      total += mesh.geometry(c).area;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    // each interior edge has two cells traversing it in opposite directions
    for (const auto& e : mesh.edges()) {
      if (e.boundary()) continue;
      int forward = 0, backward = 0;
      for (int c : e.cells) {
        const auto& loop = mesh.cell(c);
        const std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i) {
          if (loop[i] == e.a && loop[(i + 1) % n] == e.b) ++forward;
          if (loop[i] == e.b && loop[(i + 1) % n] == e.a) ++backward;
        }
      }
      CHECK(forward == 1);
      CHECK(backward == 1);
    }

    // subtriangulations: areas sum to the cell area, no new boundary nodes,
    // every parent edge appears as exactly one triangle edge
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& sub = mesh.subtriangulation(c);
      const auto& loop = mesh.cell(c);
      const std::size_t n = loop.size();
      double sum = 0.0;
      for (const auto& t : sub.triangles) {
        const Vec2 a = mesh.subtri_point(c, t[0]);
        const Vec2 b = mesh.subtri_point(c, t[1]);
        const Vec2 d = mesh.subtri_point(c, t[2]);
        const double area = 0.5 * ((b - a).x() * (d - a).y() - (b - a).y() * (d - a).x());
        CHECK(area > 0.0);
        sum += area;
      }
      CHECK(std::abs(sum - mesh.geometry(c).area) <= 1e-12 * mesh.geometry(c).area);

      std::multiset<std::pair<int, int>> tri_edges;
      for (const auto& t : sub.triangles)
        for (int i = 0; i < 3; ++i) tri_edges.insert(std::minmax(t[i], t[(i + 1) % 3]));
      for (std::size_t i = 0; i < n; ++i) {
        const auto key = std::minmax(loop[i], loop[(i + 1) % n]);
        CHECK(tri_edges.count(key) == 1);
      }
    }
  }
}

TEST_CASE("mesh size halves between consecutive levels") {
  double prev = build_paper_mesh(0).mesh_size();
  for (int level = 1; level <= 5; ++level) {
    const double h = build_paper_mesh(level).mesh_size();
    const double ratio = h / prev;
    CHECK(ratio >= 0.45);
    CHECK(ratio <= 0.55);
    prev = h;
  }
}

TEST_CASE("shape regularity is uniform over the levels") {
  const ShapeReport rep0 = check_shape_regularity(build_paper_mesh(0));
  CHECK(rep0.min_gamma1() > 0.05);
  CHECK(rep0.min_gamma2() > 0.05);
  for (int level = 1; level <= 5; ++level) {
    const ShapeReport rep = check_shape_regularity(build_paper_mesh(level));
    CHECK(rep.min_gamma1() >= 0.9 * rep0.min_gamma1());
    CHECK(rep.min_gamma2() >= 0.9 * rep0.min_gamma2());
  }
}

TEST_CASE("unit square geometry") {
  const std::vector<Vec2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const CellGeometry g = polygon_geometry(sq);
  CHECK(g.area == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.centroid.x() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.centroid.y() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("triangle edge normals") {
  const std::vector<Vec2> tri = {{0, 0}, {1, 0}, {0, 1}};
  const CellGeometry g = polygon_geometry(tri);
  CHECK(g.area == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.edge_normals[0].x() == doctest::Approx(0.0));
  CHECK(g.edge_normals[0].y() == doctest::Approx(-1.0));
  CHECK(g.edge_normals[1].x() == doctest::Approx(std::sqrt(0.5)));
  CHECK(g.edge_normals[1].y() == doctest::Approx(std::sqrt(0.5)));
  CHECK(g.edge_normals[2].x() == doctest::Approx(-1.0));
  CHECK(g.edge_normals[2].y() == doctest::Approx(0.0));
}

TEST_CASE("L-shaped hexagon area against the shoelace oracle") {
  const std::vector<Vec2> hexagon = {{0, 0}, {1, 0}, {1, 1}, {0.5, 1}, {0.5, 0.5}, {0, 0.5}};
  CHECK(polygon_area(hexagon) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(polygon_geometry(hexagon).area == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("subtriangulation examples") {
  SUBCASE("unit square fans from vertex 0") {
    const auto sub = subtriangulate({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    REQUIRE(sub.triangles.size() == 2);
    CHECK(!sub.star_point);
    CHECK(sub.triangles[0][0] == 0);
    CHECK(sub.triangles[1][0] == 0);
  }
  SUBCASE("non-convex hexagon fans from its reentrant vertex") {
    // the illustrated polygon: P1 is the reentrant corner, fan P1-P3, P1-P4, P1-P5
    auto polar = [](double deg, double r) {
      return Vec2(r * std::cos(deg * M_PI / 180.0), r * std::sin(deg * M_PI / 180.0));
    };
    const std::vector<Vec2> hexagon = {polar(280, 2),  polar(60, 10),  polar(110, 11),
                                       polar(150, 11), polar(180, 11), polar(230, 11)};
    const auto sub = subtriangulate(hexagon);
    REQUIRE(sub.triangles.size() == 4);
    CHECK(!sub.star_point);
    for (const auto& t : sub.triangles) CHECK(t[0] == 0);
  }
  SUBCASE("regular pentagon areas sum to the shoelace value") {
    std::vector<Vec2> pent;
    for (int i = 0; i < 5; ++i)
      pent.emplace_back(std::cos(2 * M_PI * i / 5.0), std::sin(2 * M_PI * i / 5.0));
    const auto sub = subtriangulate(pent);
    REQUIRE(sub.triangles.size() == 3);
    double sum = 0.0;
    for (const auto& t : sub.triangles) {
      const Vec2 a = pent[static_cast<std::size_t>(t[0])];
      const Vec2 b = pent[static_cast<std::size_t>(t[1])];
      const Vec2 c = pent[static_cast<std::size_t>(t[2])];
      sum += 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    }
    CHECK(sum == doctest::Approx(polygon_area(pent)).epsilon(1e-12));
  }
  SUBCASE("a U-shaped polygon is rejected") {
    const std::vector<Vec2> ushape = {{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1},
                                      {1, 1}, {1, 3}, {0, 3}};
    CHECK_THROWS_AS(subtriangulate(ushape), NotStarShaped);
  }
  SUBCASE("a plus-shaped polygon needs an interior star point") {
    const std::vector<Vec2> plus = {{1, 0}, {2, 0}, {2, 1}, {3, 1}, {3, 2}, {2, 2},
                                    {2, 3}, {1, 3}, {1, 2}, {0, 2}, {0, 1}, {1, 1}};
    const auto sub = subtriangulate(plus);
    REQUIRE(sub.star_point);
    CHECK(sub.triangles.size() == 12);
    CHECK(std::abs((*sub.star_point - Vec2(1.5, 1.5)).norm()) < 0.2);
  }
}

TEST_CASE("shape report values") {
  SUBCASE("unit square gamma2 is 1/sqrt(2)") {
    const PolygonalMesh unit({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
    const ShapeReport rep = check_shape_regularity(unit);
    CHECK(rep.gamma2[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rep.gamma1[0] > 0.3);
  }
  SUBCASE("degenerate sliver is reported, not rejected") {
    const PolygonalMesh sliver({{0, 0}, {1, 0}, {1, 1e-4}, {0, 5e-5}}, {{0, 1, 2, 3}});
    const ShapeReport rep = check_shape_regularity(sliver);
    CHECK(rep.gamma1[0] < 1e-3);
  }
}

TEST_CASE("mesh file round trip") {
  const PolygonalMesh mesh = build_paper_mesh(0);
  const std::string path = "roundtrip_mesh.txt";
  save_mesh(mesh, path);
  const PolygonalMesh back = load_mesh(path);
  REQUIRE(back.num_vertices() == mesh.num_vertices());
  REQUIRE(back.num_cells() == mesh.num_cells());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    CHECK(back.vertex(v).x() == mesh.vertex(v).x());
    CHECK(back.vertex(v).y() == mesh.vertex(v).y());
  }
  for (int c = 0; c < mesh.num_cells(); ++c) CHECK(back.cell(c) == mesh.cell(c));

  // save(load(x)) is byte-identical
  save_mesh(back, "roundtrip_mesh2.txt");
  std::ifstream f1(path), f2("roundtrip_mesh2.txt");
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove("roundtrip_mesh2.txt");
}

TEST_CASE("loader reorients clockwise loops") {
  const std::string path = "clockwise_mesh.txt";
  {
    std::ofstream out(path);
    out << "polymesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 3 2 1\n";
  }
  const PolygonalMesh mesh = load_mesh(path);
  CHECK(polygon_area(mesh.cell_loop(0)) == doctest::Approx(1.0));
  std::remove(path.c_str());
}

TEST_CASE("loader error paths") {
  SUBCASE("missing vertex reference") {
    const std::string path = "badvertex_mesh.txt";
    {
      std::ofstream out(path);
      out << "polymesh 1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 7\n";
    }
    CHECK_THROWS_AS(load_mesh(path), TopologyError);
    std::remove(path.c_str());
  }
  SUBCASE("non-manifold edge") {
    const std::string path = "nonmanifold_mesh.txt";
    {
      std::ofstream out(path);
      out << "polymesh 1\nvertices 4\n0 0\n1 0\n0 1\n0 -1\n"
          << "cells 3\n3 0 1 2\n3 0 3 1\n3 0 1 2\n";
    }
    CHECK_THROWS_AS(load_mesh(path), TopologyError);
    std::remove(path.c_str());
  }
  SUBCASE("parse error carries the line number") {
    const std::string path = "parse_mesh.txt";
    {
      std::ofstream out(path);
      out << "polymesh 1\nvertices 2\n0 0\nnot-a-number 1\n";
    }
    try {
      load_mesh(path);
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(err.line == 4);
    }
    std::remove(path.c_str());
  }
}
