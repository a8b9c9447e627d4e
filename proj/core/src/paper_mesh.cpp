#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "polystokes/errors.hpp"
#include "polystokes/mesh.hpp"

namespace polystokes {

namespace {

// The composite mesh family lives on the dyadic lattice of spacing
// 2^-(level+3); every undistorted vertex is a lattice point, which makes
// vertex dedup across quadrant/block seams exact.
struct LatticeBuilder {
  int level;
  int lattice_n;  // lattice points per unit length
  std::map<std::pair<int, int>, int> index;
  std::vector<std::pair<int, int>> lattice;
  std::vector<std::vector<int>> cells;

  explicit LatticeBuilder(int lvl) : level(lvl), lattice_n(8 << lvl) {}

  int vertex(int ix, int iy) {
    auto it = index.find({ix, iy});
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(lattice.size());
    index.emplace(std::make_pair(ix, iy), id);
    lattice.emplace_back(ix, iy);
    return id;
  }

  void cell(std::initializer_list<std::pair<int, int>> loop) {
    std::vector<int> ids;
    ids.reserve(loop.size());
    for (const auto& p : loop) ids.push_back(vertex(p.first, p.second));
    cells.push_back(std::move(ids));
  }
};

// Block patterns in block-lattice coordinates (a block is 4x4 lattice units).

void quad_block(LatticeBuilder& b, int x0, int y0) {
  for (int j = 0; j < 4; j += 2)
    for (int i = 0; i < 4; i += 2)
      b.cell({{x0 + i, y0 + j}, {x0 + i + 2, y0 + j}, {x0 + i + 2, y0 + j + 2}, {x0 + i, y0 + j + 2}});
}

void triangle_pentagon_block(LatticeBuilder& b, int x0, int y0) {
  for (int j = 0; j < 4; j += 2) {
    for (int i = 0; i < 4; i += 2) {
      const int cx = x0 + i + 1, cy = y0 + j + 1;
      b.cell({{x0 + i, y0 + j}, {x0 + i + 2, y0 + j}, {cx, cy}});
      b.cell({{x0 + i + 2, y0 + j}, {x0 + i + 2, y0 + j + 2}, {x0 + i, y0 + j + 2}, {x0 + i, y0 + j}, {cx, cy}});
    }
  }
}

void lshape_block(LatticeBuilder& b, int x0, int y0) {
  b.cell({{x0, y0}, {x0 + 2, y0}, {x0 + 2, y0 + 2}, {x0, y0 + 2}});
  // The side midpoints (x0+4, y0+2) and (x0+2, y0+4) are 180-degree vertices
  // of the L; from level 1 on they are hanging nodes of neighbouring blocks.
  b.cell({{x0 + 2, y0},
          {x0 + 4, y0},
          {x0 + 4, y0 + 2},
          {x0 + 4, y0 + 4},
          {x0 + 2, y0 + 4},
          {x0, y0 + 4},
          {x0, y0 + 2},
          {x0 + 2, y0 + 2}});
}

// Published quadrant-1 coordinates for the two meshes shown in the source
// material; keys are lattice coordinates of the undistorted grid point.
const std::map<std::pair<int, int>, Vec2>& published_q1(int level) {
  static const std::map<std::pair<int, int>, Vec2> l0 = {
      {{2, 2}, {0.3, 0.3}},
  };
  static const std::map<std::pair<int, int>, Vec2> l1 = {
      {{2, 2}, {0.121919, 0.089779}}, {{4, 2}, {0.264942, 0.157043}},
      {{6, 2}, {0.354721, 0.153961}}, {{2, 4}, {0.134151, 0.215849}},
      {{4, 4}, {0.275, 0.275}},       {{6, 4}, {0.346039, 0.270279}},
      {{2, 6}, {0.092957, 0.360058}}, {{4, 6}, {0.285221, 0.378081}},
      {{6, 6}, {0.409151, 0.365849}},
  };
  return level == 0 ? l0 : l1;
}

}  // namespace

PolygonalMesh build_paper_mesh(int level) {
  if (level < 0) throw InvalidSpec("build_paper_mesh: level must be nonnegative");

  LatticeBuilder b(level);
  const int nblocks = 1 << level;  // blocks per quadrant side
  const int bl = 4;                // lattice units per block
  const int q = nblocks * bl;      // lattice units per quadrant side

  for (int bj = 0; bj < nblocks; ++bj)
    for (int bi = 0; bi < nblocks; ++bi) quad_block(b, bi * bl, bj * bl);
  for (int bj = 0; bj < nblocks; ++bj)
    for (int bi = 0; bi < nblocks; ++bi) quad_block(b, q + bi * bl, bj * bl);
  for (int bj = 0; bj < nblocks; ++bj)
    for (int bi = 0; bi < nblocks; ++bi) triangle_pentagon_block(b, bi * bl, q + bj * bl);
  for (int bj = 0; bj < nblocks; ++bj)
    for (int bi = 0; bi < nblocks; ++bi) lshape_block(b, q + bi * bl, q + bj * bl);

  const double delta = 1.0 / b.lattice_n;
  std::vector<Vec2> coords(b.lattice.size());
  for (std::size_t v = 0; v < b.lattice.size(); ++v) {
    const auto [ix, iy] = b.lattice[v];
    Vec2 p(ix * delta, iy * delta);
    const bool q1_interior = ix > 0 && ix < q && iy > 0 && iy < q;
    if (q1_interior) {
      if (level <= 1) {
        p = published_q1(level).at({ix, iy});
      } else {
        const double amp = 0.1 * std::pow(2.0, -level);
        p.x() += amp * std::sin(2.0 * M_PI * ix * delta) * std::sin(2.0 * M_PI * iy * delta);
        p.y() += amp * std::sin(4.0 * M_PI * ix * delta) * std::sin(2.0 * M_PI * iy * delta);
      }
    }
    coords[v] = p;
  }

  return PolygonalMesh(std::move(coords), std::move(b.cells), level);
}

}  // namespace polystokes
