#pragma once

#include "common.hpp"

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace equilibra
{

enum class FacetTag : std::uint8_t
{
  Interior,
  Dirichlet,
  Neumann,
};

/// Assigns a boundary condition to a boundary facet from its end points.
using BoundaryTagger = std::function<FacetTag(const Point&, const Point&)>;

/// Root cell of the initial mesh and the sequence of bisections (0 = first
/// child, 1 = second child) leading to a cell.
struct Lineage
{
  Index root = 0;
  std::string path;
};

/// Affine map x = x0 + J xhat from the reference triangle.
struct AffineMap
{
  Point x0;
  Eigen::Matrix2d J;
  Eigen::Matrix2d K; // J^{-1}
  double detJ;

  Point push_forward(const Point& xhat) const { return x0 + J * xhat; }
  Point pull_back(const Point& x) const { return K * (x - x0); }
};

/// Conforming triangulation with counter-clockwise cells.
///
/// Local facet i of a cell is opposite its local vertex i. The refinement
/// edge of every cell is local facet 0, so newest vertex bisection always
/// inserts the midpoint of the facet opposite local vertex 0.
class Mesh
{
public:
  Mesh() = default;

  /// Build topology from vertices and cells. Cells are reoriented to be
  /// counter-clockwise; with relabel = true, local vertex 0 is placed
  /// opposite the longest edge. Boundary facets are tagged by `tagger`.
  Mesh(std::vector<Point> vertices, std::vector<std::array<Index, 3>> cells,
       const BoundaryTagger& tagger, bool relabel = true);

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_facets() const { return static_cast<Index>(facets_.size()); }

  const Point& vertex(Index v) const { return vertices_[v]; }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::array<Index, 3>& cell(Index c) const { return cells_[c]; }
  const std::array<Index, 2>& facet(Index f) const { return facets_[f]; }

  /// Facets of a cell, local facet i opposite local vertex i.
  const std::array<Index, 3>& cell_facets(Index c) const { return cell_facets_[c]; }

  /// Cells adjacent to a facet, lower id first; second entry is -1 on the
  /// boundary.
  const std::array<Index, 2>& facet_cells(Index f) const { return facet_cells_[f]; }

  FacetTag facet_tag(Index f) const { return facet_tags_[f]; }
  bool on_boundary(Index f) const { return facet_cells_[f][1] < 0; }

  /// Cells sharing vertex v, ascending.
  std::span<const Index> vertex_cells(Index v) const
  {
    return {vertex_cell_data_.data() + vertex_cell_offsets_[v],
            vertex_cell_data_.data() + vertex_cell_offsets_[v + 1]};
  }

  /// Facets sharing vertex v, ascending.
  std::span<const Index> vertex_facets(Index v) const
  {
    return {vertex_facet_data_.data() + vertex_facet_offsets_[v],
            vertex_facet_data_.data() + vertex_facet_offsets_[v + 1]};
  }

  bool on_boundary_vertex(Index v) const { return boundary_vertex_[v]; }

  const Lineage& lineage(Index c) const { return lineage_[c]; }

  /// Local position of a vertex in a cell, or -1.
  int local_vertex(Index c, Index v) const;

  /// Local position of a facet in a cell, or -1.
  int local_facet(Index c, Index f) const;

  AffineMap affine_map(Index c) const;
  double area(Index c) const;
  double diameter(Index c) const;
  double facet_length(Index f) const;

  /// Unit normal of a facet. On interior facets it points from the lower
  /// to the higher adjacent cell id; on boundary facets it is outward.
  Point facet_normal(Index f) const;

  /// +1 if the outward normal of cell c on local facet i agrees with
  /// facet_normal, -1 otherwise.
  int facet_normal_sign(Index c, int i) const;

  /// True if the global facet direction (lower to higher vertex id)
  /// opposes the local direction of facet i in cell c (lower to higher
  /// local vertex index).
  bool facet_reversed(Index c, int i) const;

  double min_diameter() const;
  double max_diameter() const;
  double domain_diameter() const;

  /// Copy with the vertices of cell c rotated so that its current local
  /// vertex `v0` becomes local vertex 0 (changes its refinement edge).
  Mesh rotated(Index c, int v0) const;

  /// Copy treated as a fresh initial mesh: refinement edges reset to the
  /// longest edge and every cell becomes its own lineage root.
  Mesh as_initial() const;

private:
  friend Mesh refine(const Mesh&, std::span<const Index>, std::vector<Index>*);
  using IndexTagger = std::function<FacetTag(Index, Index)>;
  static Mesh build(std::vector<Point> vertices, std::vector<std::array<Index, 3>> cells,
                    const IndexTagger& tagger, bool relabel);
  void build_topology(const IndexTagger& tagger, bool relabel);
  IndexTagger boundary_tags() const;

  std::vector<Point> vertices_;
  std::vector<std::array<Index, 3>> cells_;
  std::vector<std::array<Index, 2>> facets_;
  std::vector<std::array<Index, 3>> cell_facets_;
  std::vector<std::array<Index, 2>> facet_cells_;
  std::vector<FacetTag> facet_tags_;
  std::vector<std::uint8_t> boundary_vertex_;
  std::vector<Lineage> lineage_;
  std::vector<Index> vertex_cell_offsets_, vertex_cell_data_;
  std::vector<Index> vertex_facet_offsets_, vertex_facet_data_;
};

/// Structured triangulation of [x0,x1] x [y0,y1] with nx by ny squares,
/// each split along the same diagonal.
Mesh create_rectangle(Point lo, Point hi, int nx, int ny, const BoundaryTagger& tagger);

/// Structured triangulation of a convex quadrilateral (corners given
/// counter-clockwise) by the bilinear image of an n x n rectangle mesh.
Mesh create_quadrilateral(const std::array<Point, 4>& corners, int n,
                          const BoundaryTagger& tagger);

/// Newest vertex bisection: every marked cell is bisected at least once,
/// further bisections keep the mesh conforming. `parent` (optional)
/// receives the parent cell of every new cell.
Mesh refine(const Mesh& mesh, std::span<const Index> marked,
            std::vector<Index>* parent = nullptr);

/// Bisect every cell `rounds` times (two rounds quarter each cell).
Mesh refine_uniform(const Mesh& mesh, int rounds = 2);

/// Bisect boundary corner cells across the facet opposite the corner until
/// every boundary vertex lies in at least three cells. Refinement edges are
/// reset to the longest edge afterwards.
Mesh split_corners(const Mesh& mesh);

/// Refine until every boundary vertex has at least two interior facets
/// (needed to impose weak symmetry on each vertex patch).
Mesh enforce_patch_condition(const Mesh& mesh);

/// Number of interior facets incident to vertex v.
int count_interior_facets(const Mesh& mesh, Index v);

enum class PatchKind
{
  Internal,
  DirichletBoundary,
  NeumannBoundary,
  Mixed,
};

/// Cells around a vertex z in counter-clockwise order.
///
/// Cell i is written (z, a_i, b_i) counter-clockwise; its incoming facet
/// (z, a_i) is facets[i], its outgoing facet (z, b_i) is facets[i+1]
/// (cyclic for internal patches). Boundary patches have one facet more than
/// cells and start at the boundary facet that is incoming.
struct Patch
{
  Index vertex = -1;
  PatchKind kind = PatchKind::Internal;
  std::vector<Index> cells;
  std::vector<Index> facets;
  std::vector<int> local_vertex; // local index of z in cells[i]

  int num_cells() const { return static_cast<int>(cells.size()); }
  bool closed() const { return facets.size() == cells.size(); }
  Index incoming(int i) const { return facets[i]; }
  Index outgoing(int i) const { return facets[(i + 1) % facets.size()]; }
};

Patch build_patch(const Mesh& mesh, Index z);

} // namespace equilibra
