#include "equilibra/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

namespace equilibra
{

namespace
{
std::uint64_t edge_key(Index a, Index b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double orientation(const Point& a, const Point& b, const Point& c)
{
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

void build_csr(Index n, const std::vector<std::pair<Index, Index>>& pairs,
               std::vector<Index>& offsets, std::vector<Index>& data)
{
  offsets.assign(n + 1, 0);
  for (auto [v, x] : pairs)
    ++offsets[v + 1];
  for (Index i = 0; i < n; ++i)
    offsets[i + 1] += offsets[i];
  data.resize(pairs.size());
  std::vector<Index> pos(offsets.begin(), offsets.end() - 1);
  for (auto [v, x] : pairs)
    data[pos[v]++] = x;
  for (Index i = 0; i < n; ++i)
    std::sort(data.begin() + offsets[i], data.begin() + offsets[i + 1]);
}
} // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<Index, 3>> cells,
           const BoundaryTagger& tagger, bool relabel)
    : vertices_(std::move(vertices)), cells_(std::move(cells))
{
  lineage_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c)
    lineage_[c].root = static_cast<Index>(c);
  build_topology([&](Index a, Index b) { return tagger(vertices_[a], vertices_[b]); },
                 relabel);
}

Mesh Mesh::build(std::vector<Point> vertices, std::vector<std::array<Index, 3>> cells,
                 const IndexTagger& tagger, bool relabel)
{
  Mesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.cells_ = std::move(cells);
  mesh.lineage_.resize(mesh.cells_.size());
  for (std::size_t c = 0; c < mesh.cells_.size(); ++c)
    mesh.lineage_[c].root = static_cast<Index>(c);
  mesh.build_topology(tagger, relabel);
  return mesh;
}

void Mesh::build_topology(const IndexTagger& tagger, bool relabel)
{
  const Index nv = num_vertices();
  for (std::size_t c = 0; c < cells_.size(); ++c)
  {
    auto& cv = cells_[c];
    for (Index v : cv)
      if (v < 0 || v >= nv)
        throw MeshError("cell " + std::to_string(c) + " references vertex "
                        + std::to_string(v) + " out of range");
    const double o = orientation(vertices_[cv[0]], vertices_[cv[1]], vertices_[cv[2]]);
    if (o == 0.0)
      throw MeshError("cell " + std::to_string(c) + " is degenerate");
    if (o < 0)
      std::swap(cv[1], cv[2]);
    if (relabel)
    {
      int longest = 0;
      double lmax = -1;
      for (int i = 0; i < 3; ++i)
      {
        const double l = (vertices_[cv[(i + 1) % 3]] - vertices_[cv[(i + 2) % 3]]).norm();
        if (l > lmax * (1 + 1e-12))
        {
          lmax = l;
          longest = i;
        }
      }
      std::rotate(cv.begin(), cv.begin() + longest, cv.end());
    }
  }

  std::unordered_map<std::uint64_t, Index> edge_index;
  edge_index.reserve(cells_.size() * 2);
  facets_.clear();
  facet_cells_.clear();
  cell_facets_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c)
  {
    const auto& cv = cells_[c];
    for (int i = 0; i < 3; ++i)
    {
      const Index a = cv[(i + 1) % 3], b = cv[(i + 2) % 3];
      auto [it, inserted] = edge_index.try_emplace(edge_key(a, b), num_facets());
      if (inserted)
      {
        facets_.push_back({std::min(a, b), std::max(a, b)});
        facet_cells_.push_back({static_cast<Index>(c), -1});
      }
      else
      {
        auto& fc = facet_cells_[it->second];
        if (fc[1] >= 0)
          throw MeshError("facet shared by more than two cells");
        fc[1] = static_cast<Index>(c);
      }
      cell_facets_[c][i] = it->second;
    }
  }

  facet_tags_.assign(facets_.size(), FacetTag::Interior);
  boundary_vertex_.assign(nv, 0);
  for (Index f = 0; f < num_facets(); ++f)
    if (facet_cells_[f][1] < 0)
    {
      facet_tags_[f] = tagger(facets_[f][0], facets_[f][1]);
      if (facet_tags_[f] == FacetTag::Interior)
        throw MeshError("boundary facet " + std::to_string(f) + " tagged as interior");
      boundary_vertex_[facets_[f][0]] = 1;
      boundary_vertex_[facets_[f][1]] = 1;
    }

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(3 * cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c)
    for (Index v : cells_[c])
      pairs.emplace_back(v, static_cast<Index>(c));
  build_csr(nv, pairs, vertex_cell_offsets_, vertex_cell_data_);
  pairs.clear();
  for (Index f = 0; f < num_facets(); ++f)
  {
    pairs.emplace_back(facets_[f][0], f);
    pairs.emplace_back(facets_[f][1], f);
  }
  build_csr(nv, pairs, vertex_facet_offsets_, vertex_facet_data_);
}

Mesh::IndexTagger Mesh::boundary_tags() const
{
  auto tags = std::make_shared<std::unordered_map<std::uint64_t, FacetTag>>();
  for (Index f = 0; f < num_facets(); ++f)
    if (on_boundary(f))
      (*tags)[edge_key(facets_[f][0], facets_[f][1])] = facet_tags_[f];
  return [tags](Index a, Index b) {
    auto it = tags->find(edge_key(a, b));
    if (it == tags->end())
      throw MeshError("new boundary facet without a parent boundary facet");
    return it->second;
  };
}

int Mesh::local_vertex(Index c, Index v) const
{
  for (int i = 0; i < 3; ++i)
    if (cells_[c][i] == v)
      return i;
  return -1;
}

int Mesh::local_facet(Index c, Index f) const
{
  for (int i = 0; i < 3; ++i)
    if (cell_facets_[c][i] == f)
      return i;
  return -1;
}

AffineMap Mesh::affine_map(Index c) const
{
  const auto& cv = cells_[c];
  AffineMap map;
  map.x0 = vertices_[cv[0]];
  map.J.col(0) = vertices_[cv[1]] - map.x0;
  map.J.col(1) = vertices_[cv[2]] - map.x0;
  map.detJ = map.J.determinant();
  map.K = map.J.inverse();
  return map;
}

double Mesh::area(Index c) const
{
  const auto& cv = cells_[c];
  return 0.5 * orientation(vertices_[cv[0]], vertices_[cv[1]], vertices_[cv[2]]);
}

double Mesh::diameter(Index c) const
{
  const auto& cv = cells_[c];
  double h = 0;
  for (int i = 0; i < 3; ++i)
    h = std::max(h, (vertices_[cv[(i + 1) % 3]] - vertices_[cv[(i + 2) % 3]]).norm());
  return h;
}

double Mesh::facet_length(Index f) const
{
  return (vertices_[facets_[f][1]] - vertices_[facets_[f][0]]).norm();
}

Point Mesh::facet_normal(Index f) const
{
  const Point a = vertices_[facets_[f][0]];
  const Point t = vertices_[facets_[f][1]] - a;
  Point n(t.y(), -t.x());
  n /= n.norm();
  const Index c = facet_cells_[f][0];
  const Index opposite = cells_[c][local_facet(c, f)];
  if (n.dot(a - vertices_[opposite]) < 0)
    n = -n;
  return n;
}

int Mesh::facet_normal_sign(Index c, int i) const
{
  return facet_cells_[cell_facets_[c][i]][0] == c ? 1 : -1;
}

bool Mesh::facet_reversed(Index c, int i) const
{
  const int lo = (i == 0) ? 1 : 0;
  const int hi = (i == 2) ? 1 : 2;
  return cells_[c][lo] > cells_[c][hi];
}

double Mesh::min_diameter() const
{
  double h = std::numeric_limits<double>::max();
  for (Index c = 0; c < num_cells(); ++c)
    h = std::min(h, diameter(c));
  return h;
}

double Mesh::max_diameter() const
{
  double h = 0;
  for (Index c = 0; c < num_cells(); ++c)
    h = std::max(h, diameter(c));
  return h;
}

double Mesh::domain_diameter() const
{
  std::vector<Index> bv;
  for (Index v = 0; v < num_vertices(); ++v)
    if (boundary_vertex_[v])
      bv.push_back(v);
  double d = 0;
  for (std::size_t i = 0; i < bv.size(); ++i)
    for (std::size_t j = i + 1; j < bv.size(); ++j)
      d = std::max(d, (vertices_[bv[i]] - vertices_[bv[j]]).norm());
  return d;
}

Mesh Mesh::rotated(Index c, int v0) const
{
  auto cells = cells_;
  std::rotate(cells[c].begin(), cells[c].begin() + v0, cells[c].end());
  Mesh mesh = build(vertices_, std::move(cells), boundary_tags(), false);
  mesh.lineage_ = lineage_;
  return mesh;
}

Mesh Mesh::as_initial() const { return build(vertices_, cells_, boundary_tags(), true); }

Mesh create_rectangle(Point lo, Point hi, int nx, int ny, const BoundaryTagger& tagger)
{
  if (nx < 1 || ny < 1)
    throw MeshError("rectangle resolution must be positive");
  if (!(hi.x() > lo.x() && hi.y() > lo.y()))
    throw MeshError("rectangle has empty extent");
  std::vector<Point> vertices;
  vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vertices.emplace_back(lo.x() + (hi.x() - lo.x()) * i / nx,
                            lo.y() + (hi.y() - lo.y()) * j / ny);
  std::vector<std::array<Index, 3>> cells;
  cells.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
    {
      const Index v00 = j * (nx + 1) + i, v10 = v00 + 1;
      const Index v01 = v00 + nx + 1, v11 = v01 + 1;
      cells.push_back({v00, v10, v11});
      cells.push_back({v00, v11, v01});
    }
  return Mesh(std::move(vertices), std::move(cells), tagger);
}

Mesh create_quadrilateral(const std::array<Point, 4>& corners, int n,
                          const BoundaryTagger& tagger)
{
  for (int i = 0; i < 4; ++i)
    if (orientation(corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]) <= 0)
      throw MeshError("quadrilateral corners must be convex and counter-clockwise");
  Mesh unit = create_rectangle(Point(0, 0), Point(1, 1), n, n,
                               [](const Point&, const Point&) { return FacetTag::Dirichlet; });
  std::vector<Point> vertices;
  vertices.reserve(unit.num_vertices());
  for (const Point& p : unit.vertices())
  {
    const double s = p.x(), t = p.y();
    vertices.push_back((1 - s) * (1 - t) * corners[0] + s * (1 - t) * corners[1]
                       + s * t * corners[2] + (1 - s) * t * corners[3]);
  }
  std::vector<std::array<Index, 3>> cells;
  for (Index c = 0; c < unit.num_cells(); ++c)
    cells.push_back(unit.cell(c));
  return Mesh(std::move(vertices), std::move(cells), tagger);
}

Mesh refine(const Mesh& mesh, std::span<const Index> marked, std::vector<Index>* parent)
{
  const Index nf = mesh.num_facets();
  std::vector<std::uint8_t> edge_marked(nf, 0);
  std::deque<Index> queue;
  auto mark = [&](Index f) {
    if (!edge_marked[f])
    {
      edge_marked[f] = 1;
      queue.push_back(f);
    }
  };
  for (Index c : marked)
  {
    if (c < 0 || c >= mesh.num_cells())
      throw MeshError("marked cell " + std::to_string(c) + " out of range");
    mark(mesh.cell_facets(c)[0]);
  }
  // Closure: a cell with any marked edge must have its refinement edge marked
  while (!queue.empty())
  {
    const Index f = queue.front();
    queue.pop_front();
    for (Index c : mesh.facet_cells(f))
      if (c >= 0)
        mark(mesh.cell_facets(c)[0]);
  }

  std::vector<Point> vertices = mesh.vertices();
  std::unordered_map<std::uint64_t, Index> midpoint;
  for (Index f = 0; f < nf; ++f)
    if (edge_marked[f])
    {
      const auto& e = mesh.facet(f);
      midpoint[edge_key(e[0], e[1])] = static_cast<Index>(vertices.size());
      vertices.push_back(0.5 * (mesh.vertex(e[0]) + mesh.vertex(e[1])));
    }

  std::vector<std::array<Index, 3>> cells;
  std::vector<Lineage> lineage;
  std::vector<Index> parents;
  cells.reserve(mesh.num_cells() + 2 * midpoint.size());

  auto split = [&](auto&& self, const std::array<Index, 3>& t, Lineage lin,
                   Index origin) -> void {
    auto it = midpoint.find(edge_key(t[1], t[2]));
    if (it == midpoint.end())
    {
      cells.push_back(t);
      lineage.push_back(std::move(lin));
      parents.push_back(origin);
      return;
    }
    const Index p = it->second;
    Lineage l0 = lin, l1 = std::move(lin);
    l0.path.push_back('0');
    l1.path.push_back('1');
    self(self, {p, t[0], t[1]}, std::move(l0), origin);
    self(self, {p, t[2], t[0]}, std::move(l1), origin);
  };
  for (Index c = 0; c < mesh.num_cells(); ++c)
    split(split, mesh.cell(c), mesh.lineage(c), c);

  // Halves of a bisected boundary facet keep its tag
  std::unordered_map<std::uint64_t, FacetTag> tags;
  for (Index f = 0; f < nf; ++f)
    if (mesh.on_boundary(f))
    {
      const auto& e = mesh.facet(f);
      auto it = midpoint.find(edge_key(e[0], e[1]));
      if (it == midpoint.end())
        tags[edge_key(e[0], e[1])] = mesh.facet_tag(f);
      else
      {
        tags[edge_key(e[0], it->second)] = mesh.facet_tag(f);
        tags[edge_key(it->second, e[1])] = mesh.facet_tag(f);
      }
    }

  Mesh fine = Mesh::build(
      std::move(vertices), std::move(cells),
      [&tags](Index a, Index b) {
        auto it = tags.find(edge_key(a, b));
        if (it == tags.end())
          throw MeshError("refined boundary facet has no parent facet");
        return it->second;
      },
      false);
  fine.lineage_ = std::move(lineage);
  if (parent)
    *parent = std::move(parents);
  return fine;
}

Mesh refine_uniform(const Mesh& mesh, int rounds)
{
  Mesh fine = mesh;
  for (int r = 0; r < rounds; ++r)
  {
    std::vector<Index> all(fine.num_cells());
    for (Index c = 0; c < fine.num_cells(); ++c)
      all[c] = c;
    fine = refine(fine, all);
  }
  return fine;
}

Mesh split_corners(const Mesh& mesh)
{
  Mesh current = mesh;
  for (Index z = 0; z < current.num_vertices(); ++z)
  {
    if (!current.on_boundary_vertex(z))
      continue;
    while (current.vertex_cells(z).size() < 3)
    {
      Index best = -1;
      double amax = 0;
      for (Index c : current.vertex_cells(z))
        if (current.area(c) > amax)
        {
          amax = current.area(c);
          best = c;
        }
      const Mesh r = current.rotated(best, current.local_vertex(best, z));
      const Index marked[] = {best};
      current = refine(r, marked);
    }
  }
  return current.as_initial();
}

int count_interior_facets(const Mesh& mesh, Index v)
{
  int n = 0;
  for (Index f : mesh.vertex_facets(v))
    n += mesh.on_boundary(f) ? 0 : 1;
  return n;
}

Mesh enforce_patch_condition(const Mesh& mesh)
{
  constexpr int max_sweeps = 64;
  Mesh current = mesh;
  for (int sweep = 0; sweep < max_sweeps; ++sweep)
  {
    std::vector<Index> marked;
    Index offender = -1;
    for (Index v = 0; v < current.num_vertices(); ++v)
      if (current.on_boundary_vertex(v) && count_interior_facets(current, v) < 2)
      {
        if (offender < 0)
          offender = v;
        for (Index c : current.vertex_cells(v))
          marked.push_back(c);
      }
    if (marked.empty())
      return current;
    if (sweep + 1 == max_sweeps)
      throw MeshError("vertex " + std::to_string(offender)
                      + " keeps fewer than two interior facets under refinement");
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    current = refine(current, marked);
  }
  return current;
}

Patch build_patch(const Mesh& mesh, Index z)
{
  if (z < 0 || z >= mesh.num_vertices())
    throw MeshError("patch vertex " + std::to_string(z) + " out of range");
  const auto cells = mesh.vertex_cells(z);
  if (cells.empty())
    throw MeshError("vertex " + std::to_string(z) + " has no cells");

  // incoming facet (z, a) of cell (z, a, b) is opposite b
  std::unordered_map<Index, int> by_incoming;
  for (std::size_t i = 0; i < cells.size(); ++i)
  {
    const int lz = mesh.local_vertex(cells[i], z);
    by_incoming[mesh.cell_facets(cells[i])[(lz + 2) % 3]] = static_cast<int>(i);
  }

  Patch patch;
  patch.vertex = z;
  Index start = -1;
  bool has_dirichlet = false, has_neumann = false;
  for (Index f : mesh.vertex_facets(z))
    if (mesh.on_boundary(f))
    {
      (mesh.facet_tag(f) == FacetTag::Dirichlet ? has_dirichlet : has_neumann) = true;
      if (by_incoming.count(f))
        start = f;
    }
  const bool boundary = has_dirichlet || has_neumann;
  if (!boundary)
    start = mesh.vertex_facets(z)[0];
  else if (start < 0)
    throw MeshError("boundary vertex " + std::to_string(z) + " has no incoming boundary facet");

  patch.kind = !boundary                      ? PatchKind::Internal
               : (has_dirichlet && has_neumann) ? PatchKind::Mixed
               : has_dirichlet                  ? PatchKind::DirichletBoundary
                                                : PatchKind::NeumannBoundary;

  Index f = start;
  while (true)
  {
    auto it = by_incoming.find(f);
    if (it == by_incoming.end())
      throw MeshError("patch of vertex " + std::to_string(z) + " is not a fan");
    const Index c = cells[it->second];
    const int lz = mesh.local_vertex(c, z);
    patch.cells.push_back(c);
    patch.local_vertex.push_back(lz);
    patch.facets.push_back(f);
    f = mesh.cell_facets(c)[(lz + 1) % 3];
    if (patch.cells.size() > cells.size())
      throw MeshError("patch of vertex " + std::to_string(z) + " does not close");
    if (f == start)
      break;
    if (mesh.on_boundary(f))
    {
      patch.facets.push_back(f);
      break;
    }
  }
  if (patch.cells.size() != cells.size())
    throw MeshError("vertex " + std::to_string(z) + " has a non-manifold patch");
  return patch;
}

} // namespace equilibra
