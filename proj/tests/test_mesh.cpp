#include <doctest.h>

#include "equilibra/mesh.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace equilibra;

namespace
{
FacetTag all_dirichlet(const Point&, const Point&) { return FacetTag::Dirichlet; }

double total_area(const Mesh& mesh)
{
  double a = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
    a += mesh.area(c);
  return a;
}

double boundary_length(const Mesh& mesh)
{
  double l = 0;
  for (Index f = 0; f < mesh.num_facets(); ++f)
    if (mesh.on_boundary(f))
      l += mesh.facet_length(f);
  return l;
}

// Conformity by brute force: every cell edge appears in at most two cells
// and no vertex lies in the interior of another cell's edge.
void check_conforming(const Mesh& mesh)
{
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    CHECK(mesh.area(c) > 0);
    for (int i = 0; i < 3; ++i)
    {
      const Index f = mesh.cell_facets(c)[i];
      const auto& e = mesh.facet(f);
      const Index a = mesh.cell(c)[(i + 1) % 3], b = mesh.cell(c)[(i + 2) % 3];
      CHECK(std::min(a, b) == e[0]);
      CHECK(std::max(a, b) == e[1]);
    }
  }
  std::set<std::pair<Index, Index>> hanging;
  for (Index f = 0; f < mesh.num_facets(); ++f)
  {
    const Point a = mesh.vertex(mesh.facet(f)[0]), b = mesh.vertex(mesh.facet(f)[1]);
    const Point mid = 0.5 * (a + b);
    for (Index v = 0; v < mesh.num_vertices(); ++v)
      if ((mesh.vertex(v) - mid).norm() < 1e-12 * (b - a).norm())
        hanging.insert({f, v});
  }
  CHECK(hanging.empty());
}
} // namespace

TEST_CASE("structured unit square counts")
{
  for (int n = 1; n <= 4; ++n)
  {
    const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), n, n, all_dirichlet);
    // explicit enumeration: two triangles per square, (n+1)^2 lattice points
    int cells = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        cells += 2;
    CHECK(mesh.num_cells() == cells);
    CHECK(mesh.num_vertices() == (n + 1) * (n + 1));
    CHECK(mesh.num_vertices() - mesh.num_facets() + mesh.num_cells() == 1);
    CHECK(total_area(mesh) == doctest::Approx(1.0));
    CHECK(boundary_length(mesh) == doctest::Approx(4.0));
    // refinement edge (local facet 0) is the longest edge
    for (Index c = 0; c < mesh.num_cells(); ++c)
      CHECK(mesh.facet_length(mesh.cell_facets(c)[0]) == doctest::Approx(mesh.diameter(c)));
  }
}

TEST_CASE("facet normals and signs")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(2, 1), 3, 2, all_dirichlet);
  for (Index f = 0; f < mesh.num_facets(); ++f)
  {
    const Point n = mesh.facet_normal(f);
    CHECK(n.norm() == doctest::Approx(1.0));
    const auto& fc = mesh.facet_cells(f);
    CHECK(mesh.facet_normal_sign(fc[0], mesh.local_facet(fc[0], f)) == 1);
    if (fc[1] >= 0)
    {
      CHECK(fc[0] < fc[1]);
      CHECK(mesh.facet_normal_sign(fc[1], mesh.local_facet(fc[1], f)) == -1);
    }
    else
    {
      const Point mid = 0.5 * (mesh.vertex(mesh.facet(f)[0]) + mesh.vertex(mesh.facet(f)[1]));
      const Point centre(1.0, 0.5);
      CHECK(n.dot(mid - centre) > 0);
    }
  }
}

TEST_CASE("newest vertex bisection stays conforming")
{
  Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 3, 3, all_dirichlet);
  std::mt19937 gen(42);
  for (int level = 0; level < 6; ++level)
  {
    std::vector<Index> marked;
    std::uniform_int_distribution<Index> pick(0, mesh.num_cells() - 1);
    for (int i = 0; i < 3; ++i)
      marked.push_back(pick(gen));
    std::vector<Index> parent;
    const Mesh fine = refine(mesh, marked, &parent);
    CHECK(fine.num_cells() > mesh.num_cells());
    CHECK(static_cast<Index>(parent.size()) == fine.num_cells());
    CHECK(total_area(fine) == doctest::Approx(1.0));
    CHECK(boundary_length(fine) == doctest::Approx(4.0));
    check_conforming(fine);
    // every marked cell was split
    for (Index c : marked)
      CHECK(std::count(parent.begin(), parent.end(), c) >= 2);
    // lineage extends the parent's lineage by one or two bisections
    for (Index c = 0; c < fine.num_cells(); ++c)
    {
      const Lineage& lp = mesh.lineage(parent[c]);
      const Lineage& lc = fine.lineage(c);
      CHECK(lc.root == lp.root);
      CHECK(lc.path.starts_with(lp.path));
      CHECK(lc.path.size() <= lp.path.size() + 2);
    }
    mesh = fine;
  }
}

TEST_CASE("uniform refinement quarters every cell")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 4, 4, all_dirichlet);
  const Mesh fine = refine_uniform(mesh, 2);
  CHECK(fine.num_cells() == 4 * mesh.num_cells());
  CHECK(fine.max_diameter() == doctest::Approx(0.5 * mesh.max_diameter()));
  check_conforming(fine);
}

TEST_CASE("boundary tags are inherited by bisected facets")
{
  auto tagger = [](const Point& a, const Point& b) {
    return (a.x() < 1e-12 && b.x() < 1e-12) ? FacetTag::Dirichlet : FacetTag::Neumann;
  };
  const Mesh fine = refine_uniform(create_rectangle(Point(0, 0), Point(1, 1), 2, 2, tagger), 3);
  double dirichlet = 0;
  for (Index f = 0; f < fine.num_facets(); ++f)
    if (fine.on_boundary(f))
    {
      const Point a = fine.vertex(fine.facet(f)[0]), b = fine.vertex(fine.facet(f)[1]);
      CHECK(fine.facet_tag(f) == tagger(a, b));
      if (fine.facet_tag(f) == FacetTag::Dirichlet)
        dirichlet += fine.facet_length(f);
    }
    else
      CHECK(fine.facet_tag(f) == FacetTag::Interior);
  CHECK(dirichlet == doctest::Approx(1.0));
}

TEST_CASE("vertex patches are ordered counter-clockwise")
{
  auto tagger = [](const Point& a, const Point& b) {
    return (a.x() < 1e-12 && b.x() < 1e-12) ? FacetTag::Dirichlet : FacetTag::Neumann;
  };
  const Mesh mesh = refine(create_rectangle(Point(0, 0), Point(1, 1), 3, 3, tagger),
                           std::vector<Index>{0, 7, 11});
  for (Index z = 0; z < mesh.num_vertices(); ++z)
  {
    const Patch patch = build_patch(mesh, z);
    CHECK(patch.num_cells() == static_cast<int>(mesh.vertex_cells(z).size()));
    CHECK(patch.closed() == !mesh.on_boundary_vertex(z));
    CHECK(static_cast<int>(patch.facets.size())
          == patch.num_cells() + (patch.closed() ? 0 : 1));
    for (int i = 0; i < patch.num_cells(); ++i)
    {
      const Index c = patch.cells[i];
      const int lz = patch.local_vertex[i];
      CHECK(mesh.cell(c)[lz] == z);
      // incoming facet is opposite b_i = local (lz+2), outgoing opposite a_i
      CHECK(mesh.cell_facets(c)[(lz + 2) % 3] == patch.incoming(i));
      CHECK(mesh.cell_facets(c)[(lz + 1) % 3] == patch.outgoing(i));
    }
    if (!patch.closed())
    {
      CHECK(mesh.on_boundary(patch.facets.front()));
      CHECK(mesh.on_boundary(patch.facets.back()));
    }
    // angles around z sum to 2 pi (or the boundary angle)
    double angle = 0;
    for (int i = 0; i < patch.num_cells(); ++i)
    {
      const auto& cv = mesh.cell(patch.cells[i]);
      const int lz = patch.local_vertex[i];
      const Point a = mesh.vertex(cv[(lz + 1) % 3]) - mesh.vertex(z);
      const Point b = mesh.vertex(cv[(lz + 2) % 3]) - mesh.vertex(z);
      angle += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    if (patch.closed())
      CHECK(angle == doctest::Approx(2 * M_PI));
    const Point p = mesh.vertex(z);
    const bool corner = (p.x() < 1e-12 || p.x() > 1 - 1e-12) && (p.y() < 1e-12 || p.y() > 1 - 1e-12);
    if (!patch.closed())
      CHECK(angle == doctest::Approx(corner ? M_PI / 2 : M_PI));
    if (p.x() < 1e-12 && p.y() > 1e-12 && p.y() < 1 - 1e-12)
      CHECK(patch.kind == PatchKind::DirichletBoundary);
    if (corner && p.x() < 1e-12)
      CHECK(patch.kind == PatchKind::Mixed);
  }
}

TEST_CASE("corner splitting and the interior facet condition")
{
  const std::array<Point, 4> cook = {Point(0, 0), Point(48, 44), Point(48, 60), Point(0, 44)};
  const Mesh coarse = create_quadrilateral(cook, 4, all_dirichlet);
  CHECK(total_area(coarse) == doctest::Approx(48 * 44 - 0.5 * 48 * 44 + 0.5 * 48 * 16));
  const Mesh split = split_corners(coarse);
  check_conforming(split);
  for (Index v = 0; v < split.num_vertices(); ++v)
    if (split.on_boundary_vertex(v))
      CHECK(split.vertex_cells(v).size() >= 3);
  for (Index c = 0; c < split.num_cells(); ++c)
    CHECK(split.lineage(c).path.empty());

  Mesh fine = refine(split, std::vector<Index>{0, 1, 2, 3});
  fine = enforce_patch_condition(fine);
  check_conforming(fine);
  for (Index v = 0; v < fine.num_vertices(); ++v)
    if (fine.on_boundary_vertex(v))
      CHECK(count_interior_facets(fine, v) >= 2);
}

TEST_CASE("malformed input is rejected")
{
  std::vector<Point> v = {Point(0, 0), Point(1, 0), Point(2, 0)};
  CHECK_THROWS_AS(Mesh(v, {{0, 1, 2}}, all_dirichlet), MeshError);
  std::vector<Point> w = {Point(0, 0), Point(1, 0), Point(0, 1)};
  CHECK_THROWS_AS(Mesh(w, {{0, 1, 5}}, all_dirichlet), MeshError);
  CHECK_THROWS_AS(create_rectangle(Point(0, 0), Point(1, 1), 0, 2, all_dirichlet), MeshError);
}
