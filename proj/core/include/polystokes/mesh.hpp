#ifndef POLYSTOKES_MESH_HPP
#define POLYSTOKES_MESH_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace polystokes {

using Vec2 = Eigen::Vector2d;

/// Unique undirected mesh edge. Canonical orientation runs from the lower
/// vertex index `a` to the higher `b`; `cells[1] < 0` marks a boundary edge.
struct MeshEdge {
  int a = -1, b = -1;
  std::array<int, 2> cells = {-1, -1};
  bool boundary() const { return cells[1] < 0; }
};

/// Fan triangulation of one cell that introduces no new boundary nodes.
/// When stored inside a PolygonalMesh, triangle vertices index the parent
/// mesh and the optional star point is index `mesh.num_vertices()`; the
/// standalone subtriangulate() indexes the loop it was given, star point
/// last.
struct SubTriangulation {
  int cell = -1;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::optional<Vec2> star_point;
};

/// Per-cell shape-regularity estimates: gamma1 = sampled kernel
/// inscribed-ball radius over h_K, gamma2 = min vertex distance over h_K.
struct ShapeReport {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  double min_gamma1() const;
  double min_gamma2() const;
};

/// Basic polygon geometry used all over the place.
struct CellGeometry {
  double area = 0.0;
  Vec2 centroid = Vec2::Zero();
  double diameter = 0.0;                // h_K, max pairwise vertex distance
  std::vector<Vec2> edge_normals;       // outward unit normals, loop order
  std::vector<double> edge_lengths;     // loop order
};

double polygon_area(const std::vector<Vec2>& loop);
CellGeometry polygon_geometry(const std::vector<Vec2>& loop);

/// Immutable polygonal mesh: vertex coordinates, counterclockwise cell loops,
/// unique edges with adjacency, and a subtriangulation per cell. Hanging
/// nodes are ordinary loop vertices with a 180 degree opening.
class PolygonalMesh {
 public:
  PolygonalMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells, int level = 0);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int level() const { return level_; }

  const Vec2& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<int>& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const MeshEdge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<MeshEdge>& edges() const { return edges_; }

  /// Edge index of the loop side (v_i, v_{i+1}) of cell c.
  int edge_of(int c, int side) const { return cell_edges_[static_cast<std::size_t>(c)][static_cast<std::size_t>(side)]; }
  bool vertex_on_boundary(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }

  std::vector<Vec2> cell_loop(int c) const;
  const CellGeometry& geometry(int c) const { return geometry_[static_cast<std::size_t>(c)]; }
  const SubTriangulation& subtriangulation(int c) const { return subtri_[static_cast<std::size_t>(c)]; }

  /// Coordinates of a subtriangulation vertex (mesh vertex or star point).
  Vec2 subtri_point(int c, int idx) const;

  /// Largest cell diameter.
  double mesh_size() const;
  double domain_area() const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<bool> boundary_vertex_;
  std::vector<CellGeometry> geometry_;
  std::vector<SubTriangulation> subtri_;
  int level_ = 0;
};

/// Fan subtriangulation of one cell: from the first vertex that sees the whole
/// boundary, otherwise from the sampled kernel's best interior point.
/// Throws NotStarShaped when the kernel sampling finds no admissible center.
SubTriangulation subtriangulate(const std::vector<Vec2>& loop, int cell_id = -1);

/// Composite mesh family of distorted quads, squares, triangles + non-convex
/// pentagons, and L-shaped polygons with hanging nodes. Levels 0 and 1
/// replicate the published coordinates; higher levels are generated.
PolygonalMesh build_paper_mesh(int level);

ShapeReport check_shape_regularity(const PolygonalMesh& mesh);

PolygonalMesh load_mesh(const std::string& path);
void save_mesh(const PolygonalMesh& mesh, const std::string& path);

}  // namespace polystokes

#endif
