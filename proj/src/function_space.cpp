#include "equilibra/function_space.hpp"
#include "equilibra/quadrature.hpp"

namespace equilibra
{

FunctionSpace::FunctionSpace(const Mesh& mesh, ReferenceElement element)
    : mesh_(&mesh), element_(std::move(element))
{
  const Index nc = mesh.num_cells();
  const int ndofs = element_.num_dofs();
  dofs_.resize(static_cast<std::size_t>(nc) * ndofs);
  signs_.assign(dofs_.size(), 1.0);

  switch (element_.family())
  {
  case ElementFamily::DiscLagrange:
    for (std::size_t i = 0; i < dofs_.size(); ++i)
      dofs_[i] = static_cast<Index>(i);
    num_dofs_ = static_cast<Index>(dofs_.size());
    break;

  case ElementFamily::Lagrange:
  {
    const int per_facet = element_.degree() - 1;
    const int per_cell = static_cast<int>(element_.interior_dofs().size());
    const Index facet_offset = mesh.num_vertices();
    const Index cell_offset = facet_offset + mesh.num_facets() * per_facet;
    for (Index c = 0; c < nc; ++c)
    {
      Index* d = dofs_.data() + c * ndofs;
      for (int v = 0; v < 3; ++v)
        d[element_.vertex_dofs(v)[0]] = mesh.cell(c)[v];
      for (int f = 0; f < 3; ++f)
      {
        const Index gf = mesh.cell_facets(c)[f];
        const bool rev = mesh.facet_reversed(c, f);
        const auto local = element_.facet_dofs(f);
        for (int i = 0; i < per_facet; ++i)
          d[local[i]] = facet_offset + gf * per_facet + (rev ? per_facet - 1 - i : i);
      }
      const auto interior = element_.interior_dofs();
      for (int i = 0; i < per_cell; ++i)
        d[interior[i]] = cell_offset + c * per_cell + i;
    }
    num_dofs_ = cell_offset + nc * per_cell;
    break;
  }

  case ElementFamily::RaviartThomas:
  {
    const int m = element_.degree();
    const int per_cell = static_cast<int>(element_.interior_dofs().size());
    const Index cell_offset = mesh.num_facets() * m;
    for (Index c = 0; c < nc; ++c)
    {
      Index* d = dofs_.data() + c * ndofs;
      double* s = signs_.data() + c * ndofs;
      for (int f = 0; f < 3; ++f)
      {
        const Index gf = mesh.cell_facets(c)[f];
        const double sn = mesh.facet_normal_sign(c, f);
        const bool rev = mesh.facet_reversed(c, f);
        const auto local = element_.facet_dofs(f);
        for (int j = 0; j < m; ++j)
        {
          d[local[j]] = gf * m + j;
          s[local[j]] = (rev && (j % 2 == 1)) ? -sn : sn;
        }
      }
      const auto interior = element_.interior_dofs();
      for (int i = 0; i < per_cell; ++i)
        d[interior[i]] = cell_offset + c * per_cell + i;
    }
    num_dofs_ = cell_offset + nc * per_cell;
    break;
  }
  }
}

std::vector<Index> FunctionSpace::boundary_dofs(FacetTag tag) const
{
  if (element_.family() != ElementFamily::Lagrange)
    throw std::logic_error("boundary_dofs requires a Lagrange space");
  std::vector<std::uint8_t> flag(num_dofs_, 0);
  const Mesh& mesh = *mesh_;
  for (Index f = 0; f < mesh.num_facets(); ++f)
  {
    if (!mesh.on_boundary(f) || mesh.facet_tag(f) != tag)
      continue;
    const Index c = mesh.facet_cells(f)[0];
    const int lf = mesh.local_facet(c, f);
    const auto d = cell_dofs(c);
    flag[d[element_.vertex_dofs((lf + 1) % 3)[0]]] = 1;
    flag[d[element_.vertex_dofs((lf + 2) % 3)[0]]] = 1;
    for (int i : element_.facet_dofs(lf))
      flag[d[i]] = 1;
  }
  std::vector<Index> out;
  for (Index i = 0; i < num_dofs_; ++i)
    if (flag[i])
      out.push_back(i);
  return out;
}

std::vector<Point> FunctionSpace::dof_coordinates() const
{
  if (element_.family() == ElementFamily::RaviartThomas)
    throw std::logic_error("dof_coordinates requires a Lagrange space");
  const auto& nodes = element_.interpolation_points();
  std::vector<Point> x(num_dofs_);
  for (Index c = 0; c < mesh_->num_cells(); ++c)
  {
    const AffineMap map = mesh_->affine_map(c);
    const auto d = cell_dofs(c);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      x[d[i]] = map.push_forward(nodes[i]);
  }
  return x;
}

Eigen::VectorXd DiscreteFunction::cell_coefficients(Index c) const
{
  const auto d = space->cell_dofs(c);
  const auto s = space->cell_signs(c);
  Eigen::VectorXd local(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    local[i] = s[i] * x[d[i]];
  return local;
}

CellEvaluator make_evaluator(const Mesh& mesh, int components,
                             std::function<void(const Point&, double*)> f)
{
  return [&mesh, components, f = std::move(f)](Index c, std::span<const Point> pts,
                                               Eigen::MatrixXd& values) {
    const AffineMap map = mesh.affine_map(c);
    values.resize(static_cast<Eigen::Index>(pts.size()), components);
    std::vector<double> buf(components);
    for (std::size_t p = 0; p < pts.size(); ++p)
    {
      f(map.push_forward(pts[p]), buf.data());
      for (int k = 0; k < components; ++k)
        values(static_cast<Eigen::Index>(p), k) = buf[k];
    }
  };
}

std::vector<DiscreteFunction> project_l2(std::shared_ptr<const FunctionSpace> space,
                                         int components, const CellEvaluator& f,
                                         int quadrature_degree)
{
  const ReferenceElement& e = space->element();
  if (e.family() != ElementFamily::DiscLagrange)
    throw ConfigurationError("L2 projection targets a discontinuous Lagrange space");
  const TriangleRule rule = triangle_rule(std::max(quadrature_degree, 2 * e.degree()));
  const Tabulation tab = e.tabulate(rule.points);
  const int n = e.num_dofs();
  const int nq = static_cast<int>(rule.size());

  Eigen::MatrixXd phi(nq, n);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < n; ++i)
      phi(q, i) = tab.value(q, i);
  Eigen::MatrixXd wphi = phi;
  for (int q = 0; q < nq; ++q)
    wphi.row(q) *= rule.weights[q];
  const Eigen::MatrixXd mass = phi.transpose() * wphi;
  const Eigen::LLT<Eigen::MatrixXd> llt(mass);
  // coefficients = M^{-1} (wphi^T f), constant per reference element
  const Eigen::MatrixXd projector = llt.solve(wphi.transpose());

  std::vector<DiscreteFunction> out;
  for (int k = 0; k < components; ++k)
    out.emplace_back(space);

  const Index nc = space->mesh().num_cells();
#pragma omp parallel
  {
    Eigen::MatrixXd values;
#pragma omp for schedule(static)
    for (Index c = 0; c < nc; ++c)
    {
      f(c, rule.points, values);
      const Eigen::MatrixXd coeffs = projector * values;
      const auto d = space->cell_dofs(c);
      for (int k = 0; k < components; ++k)
        for (int i = 0; i < n; ++i)
          out[k].x[d[i]] = coeffs(i, k);
    }
  }
  return out;
}

DiscreteFunction interpolate_rt(std::shared_ptr<const FunctionSpace> space,
                                const std::function<Point(const Point&)>& field)
{
  const ReferenceElement& e = space->element();
  if (e.family() != ElementFamily::RaviartThomas)
    throw ConfigurationError("interpolate_rt needs a Raviart-Thomas space");
  const Mesh& mesh = space->mesh();
  const auto& ipts = e.interpolation_points();
  const Eigen::MatrixXd& I = e.interpolation_matrix();
  DiscreteFunction sigma(space);
  Eigen::VectorXd vhat(2 * ipts.size());
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    for (std::size_t p = 0; p < ipts.size(); ++p)
    {
      const Point v = field(map.push_forward(ipts[p]));
      vhat.segment<2>(2 * p) = map.detJ * (map.K * v);
    }
    const Eigen::VectorXd local = I * vhat;
    const auto d = space->cell_dofs(c);
    const auto s = space->cell_signs(c);
    for (std::size_t i = 0; i < d.size(); ++i)
      sigma.x[d[i]] = s[i] * local[i];
  }
  return sigma;
}

DiscreteFunction interpolate_lagrange(std::shared_ptr<const FunctionSpace> space,
                                      const std::function<double(const Point&)>& f)
{
  DiscreteFunction u(space);
  const auto x = space->dof_coordinates();
  for (Index i = 0; i < space->num_dofs(); ++i)
    u.x[i] = f(x[i]);
  return u;
}

Eigen::VectorXd evaluate_scalar(const DiscreteFunction& u, Index c, const Tabulation& tab)
{
  const Eigen::VectorXd local = u.cell_coefficients(c);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(tab.num_points);
  for (int p = 0; p < tab.num_points; ++p)
    for (int i = 0; i < tab.num_basis; ++i)
      v[p] += local[i] * tab.value(p, i);
  return v;
}

Eigen::MatrixXd evaluate_gradient(const DiscreteFunction& u, Index c, const Tabulation& tab,
                                  const AffineMap& map)
{
  const Eigen::VectorXd local = u.cell_coefficients(c);
  Eigen::MatrixXd g(tab.num_points, 2);
  const Eigen::Matrix2d KT = map.K.transpose();
  for (int p = 0; p < tab.num_points; ++p)
  {
    Eigen::Vector2d gh = Eigen::Vector2d::Zero();
    for (int i = 0; i < tab.num_basis; ++i)
    {
      gh[0] += local[i] * tab.grad(p, i, 0);
      gh[1] += local[i] * tab.grad(p, i, 1);
    }
    g.row(p) = (KT * gh).transpose();
  }
  return g;
}

Eigen::MatrixXd evaluate_rt(const DiscreteFunction& sigma, Index c, const Tabulation& tab,
                            const AffineMap& map)
{
  const Eigen::VectorXd local = sigma.cell_coefficients(c);
  Eigen::MatrixXd v(tab.num_points, 2);
  for (int p = 0; p < tab.num_points; ++p)
  {
    Eigen::Vector2d vh = Eigen::Vector2d::Zero();
    for (int i = 0; i < tab.num_basis; ++i)
    {
      vh[0] += local[i] * tab.value(p, i, 0);
      vh[1] += local[i] * tab.value(p, i, 1);
    }
    v.row(p) = (map.J * vh).transpose() / map.detJ;
  }
  return v;
}

Eigen::VectorXd evaluate_rt_divergence(const DiscreteFunction& sigma, Index c,
                                       const Tabulation& tab, const AffineMap& map)
{
  const Eigen::VectorXd local = sigma.cell_coefficients(c);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(tab.num_points);
  for (int p = 0; p < tab.num_points; ++p)
    for (int i = 0; i < tab.num_basis; ++i)
      d[p] += local[i] * tab.div(p, i);
  return d / map.detJ;
}

} // namespace equilibra
