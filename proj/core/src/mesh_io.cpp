#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polystokes/errors.hpp"
#include "polystokes/mesh.hpp"

namespace polystokes {

// Line-based text format:
//   polymesh 1
//   vertices N
//   x y            (N lines, full precision)
//   cells M
//   n i1 ... in    (M lines, 0-based counterclockwise loops)

void save_mesh(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "polymesh 1\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  char buf[64];
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", mesh.vertex(v).x(), mesh.vertex(v).y());
    out << buf;
  }
  out << "cells " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& loop = mesh.cell(c);
    out << loop.size();
    for (int v : loop) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

PolygonalMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  int lineno = 0;
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "unexpected end of file");
    ++lineno;
    return line;
  };

  {
    std::istringstream hdr(next_line());
    std::string magic;
    int version = 0;
    if (!(hdr >> magic >> version) || magic != "polymesh" || version != 1)
      throw ParseError(lineno, "expected header 'polymesh 1'");
  }

  int nv = 0;
  {
    std::istringstream vs(next_line());
    std::string kw;
    if (!(vs >> kw >> nv) || kw != "vertices" || nv < 0)
      throw ParseError(lineno, "expected 'vertices N'");
  }
  std::vector<Vec2> vertices(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    std::istringstream ls(next_line());
    double x, y;
    if (!(ls >> x >> y)) throw ParseError(lineno, "expected 'x y'");
    vertices[static_cast<std::size_t>(v)] = Vec2(x, y);
  }

  int nc = 0;
  {
    std::istringstream cs(next_line());
    std::string kw;
    if (!(cs >> kw >> nc) || kw != "cells" || nc < 0) throw ParseError(lineno, "expected 'cells M'");
  }
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    std::istringstream ls(next_line());
    int n = 0;
    if (!(ls >> n) || n < 3) throw ParseError(lineno, "expected cell size >= 3");
    auto& loop = cells[static_cast<std::size_t>(c)];
    loop.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      if (!(ls >> loop[static_cast<std::size_t>(i)])) throw ParseError(lineno, "truncated cell line");
    for (int v : loop)
      if (v < 0 || v >= nv)
        throw TopologyError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));
    // Reorient clockwise loops; the constructor expects counterclockwise.
    std::vector<Vec2> pts(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) pts[i] = vertices[static_cast<std::size_t>(loop[i])];
    if (polygon_area(pts) < 0.0) std::reverse(loop.begin(), loop.end());
  }

  return PolygonalMesh(std::move(vertices), std::move(cells), 0);
}

}  // namespace polystokes
