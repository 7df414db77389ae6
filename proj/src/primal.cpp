#include "equilibra/primal.hpp"
#include "equilibra/quadrature.hpp"

#ifdef EQUILIBRA_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#else
#include <Eigen/SparseCholesky>
#endif

#include <algorithm>

namespace equilibra
{

namespace
{
constexpr Index block_size = 4096;

// Shared cell loop: local element matrices are computed in parallel one block
// at a time and inserted in cell order, so the assembled matrix does not
// depend on the number of threads.
template <typename Kernel>
SparseSystem assemble(const FunctionSpace& V, int components, Kernel&& kernel)
{
  const Mesh& mesh = V.mesh();
  const Index n = V.num_dofs();
  const int nloc = V.dofs_per_cell() * components;
  SparseSystem sys;
  sys.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * components);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_cells()) * nloc * nloc);
  std::vector<Eigen::MatrixXd> Ae(block_size);
  std::vector<Eigen::VectorXd> be(block_size);
  for (Index start = 0; start < mesh.num_cells(); start += block_size)
  {
    const Index stop = std::min(mesh.num_cells(), start + block_size);
#pragma omp parallel for schedule(static)
    for (Index c = start; c < stop; ++c)
      kernel(c, Ae[c - start], be[c - start]);
    for (Index c = start; c < stop; ++c)
    {
      const auto d = V.cell_dofs(c);
      const int nd = static_cast<int>(d.size());
      for (int a = 0; a < components; ++a)
        for (int i = 0; i < nd; ++i)
        {
          const Index gi = a * n + d[i];
          sys.b[gi] += be[c - start][a * nd + i];
          for (int b = 0; b < components; ++b)
            for (int j = 0; j < nd; ++j)
              triplets.emplace_back(gi, b * n + d[j], Ae[c - start](a * nd + i, b * nd + j));
        }
    }
  }
  sys.A.resize(sys.b.size(), sys.b.size());
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

Point centroid(const Mesh& mesh, Index c)
{
  const auto& v = mesh.cell(c);
  return (mesh.vertex(v[0]) + mesh.vertex(v[1]) + mesh.vertex(v[2])) / 3.0;
}

// Cached tabulation for repeated evaluation at the same reference points
struct TabulationCache
{
  std::vector<Point> points;
  Tabulation tab;

  const Tabulation* find(std::span<const Point> pts) const
  {
    if (pts.size() != points.size())
      return nullptr;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i] != points[i])
        return nullptr;
    return &tab;
  }
};

std::shared_ptr<TabulationCache> make_cache(const ReferenceElement& e, int degree)
{
  auto cache = std::make_shared<TabulationCache>();
  cache->points = triangle_rule(degree).points;
  cache->tab = e.tabulate(cache->points);
  return cache;
}
} // namespace

double cell_kappa(const Mesh& mesh, Index c, const PoissonProblem& problem)
{
  return problem.kappa ? problem.kappa(centroid(mesh, c)) : 1.0;
}

SparseSystem assemble_poisson(const FunctionSpace& V, const PoissonProblem& problem,
                              int quadrature_degree)
{
  const Mesh& mesh = V.mesh();
  const ReferenceElement& e = V.element();
  const TriangleRule rule = triangle_rule(quadrature_degree);
  const Tabulation tab = e.tabulate(rule.points);
  const int nd = e.num_dofs();
  const int nq = static_cast<int>(rule.size());

  std::vector<double> kappas(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    kappas[c] = cell_kappa(mesh, c, problem);
    if (!(kappas[c] > 0))
      throw ConfigurationError("conductivity must be positive");
  }

  auto kernel = [&](Index c, Eigen::MatrixXd& Ae, Eigen::VectorXd& be) {
    const AffineMap map = mesh.affine_map(c);
    const double kappa = kappas[c];
    Ae = Eigen::MatrixXd::Zero(nd, nd);
    be = Eigen::VectorXd::Zero(nd);
    Eigen::MatrixXd G(nd, 2);
    const Eigen::Matrix2d K = map.K;
    for (int q = 0; q < nq; ++q)
    {
      for (int i = 0; i < nd; ++i)
      {
        const Eigen::Vector2d gh(tab.grad(q, i, 0), tab.grad(q, i, 1));
        G.row(i) = (K.transpose() * gh).transpose();
      }
      const double w = rule.weights[q] * map.detJ;
      Ae.noalias() += (w * kappa) * G * G.transpose();
      if (problem.source)
      {
        const double f = problem.source(map.push_forward(rule.points[q]));
        for (int i = 0; i < nd; ++i)
          be[i] += w * f * tab.value(q, i);
      }
    }
  };
  SparseSystem sys = assemble(V, 1, kernel);

  sys.constrained = V.boundary_dofs(FacetTag::Dirichlet);
  const auto x = V.dof_coordinates();
  for (Index d : sys.constrained)
    sys.values.push_back(problem.dirichlet ? problem.dirichlet(x[d]) : 0.0);
  return sys;
}

SparseSystem assemble_elasticity(const FunctionSpace& V, const ElasticityProblem& problem,
                                 int quadrature_degree)
{
  const Mesh& mesh = V.mesh();
  const ReferenceElement& e = V.element();
  if (!(problem.lambda > 0))
    throw ConfigurationError("lambda must be positive");
  const TriangleRule rule = triangle_rule(quadrature_degree);
  const Tabulation tab = e.tabulate(rule.points);
  const int nd = e.num_dofs();
  const int nq = static_cast<int>(rule.size());
  const double lambda = problem.lambda;

  const LineRule line = gauss_legendre(e.degree() + 2);
  std::vector<std::vector<Point>> facet_points(3);
  std::vector<Tabulation> facet_tabs;
  for (int f = 0; f < 3; ++f)
  {
    const ReferenceFacet& rf = reference_facet(f);
    for (double s : line.points)
      facet_points[f].push_back(rf.start + s * (rf.end - rf.start));
    facet_tabs.push_back(e.tabulate(facet_points[f]));
  }

  auto kernel = [&](Index c, Eigen::MatrixXd& Ae, Eigen::VectorXd& be) {
    const AffineMap map = mesh.affine_map(c);
    Ae = Eigen::MatrixXd::Zero(2 * nd, 2 * nd);
    be = Eigen::VectorXd::Zero(2 * nd);
    Eigen::MatrixXd G(nd, 2);
    for (int q = 0; q < nq; ++q)
    {
      for (int i = 0; i < nd; ++i)
      {
        const Eigen::Vector2d gh(tab.grad(q, i, 0), tab.grad(q, i, 1));
        G.row(i) = (map.K.transpose() * gh).transpose();
      }
      const double w = rule.weights[q] * map.detJ;
      const Eigen::MatrixXd GG = G * G.transpose();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
        {
          auto block = Ae.block(a * nd, b * nd, nd, nd);
          if (a == b)
            block.noalias() += w * GG;
          // d_b phi_i d_a phi_j + lambda d_a phi_i d_b phi_j
          block.noalias() += w * G.col(b) * G.col(a).transpose();
          block.noalias() += (w * lambda) * G.col(a) * G.col(b).transpose();
        }
      if (problem.body_force)
      {
        const Point f = problem.body_force(map.push_forward(rule.points[q]));
        for (int i = 0; i < nd; ++i)
        {
          be[i] += w * f.x() * tab.value(q, i);
          be[nd + i] += w * f.y() * tab.value(q, i);
        }
      }
    }
    if (problem.traction)
      for (int lf = 0; lf < 3; ++lf)
      {
        const Index gf = mesh.cell_facets(c)[lf];
        if (!mesh.on_boundary(gf) || mesh.facet_tag(gf) != FacetTag::Neumann)
          continue;
        const double len = mesh.facet_length(gf);
        for (std::size_t q = 0; q < line.points.size(); ++q)
        {
          const Point t = problem.traction(map.push_forward(facet_points[lf][q]));
          const double w = line.weights[q] * len;
          for (int i = 0; i < nd; ++i)
          {
            const double phi = facet_tabs[lf].value(static_cast<int>(q), i);
            be[i] += w * t.x() * phi;
            be[nd + i] += w * t.y() * phi;
          }
        }
      }
  };
  SparseSystem sys = assemble(V, 2, kernel);

  const auto bdofs = V.boundary_dofs(FacetTag::Dirichlet);
  const auto x = V.dof_coordinates();
  const Index n = V.num_dofs();
  for (int a = 0; a < 2; ++a)
    for (Index d : bdofs)
    {
      sys.constrained.push_back(a * n + d);
      const Point g = problem.dirichlet ? problem.dirichlet(x[d]) : Point(0, 0);
      sys.values.push_back(g[a]);
    }
  return sys;
}

Eigen::VectorXd solve_constrained(const SparseSystem& system, double* residual)
{
  const Index n = static_cast<Index>(system.b.size());
  if (system.constrained.empty())
    throw SingularSystemError("no Dirichlet boundary: the system is singular");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<Index> reduced(n, 0);
  for (std::size_t i = 0; i < system.constrained.size(); ++i)
  {
    reduced[system.constrained[i]] = -1;
    x[system.constrained[i]] = system.values[i];
  }
  Index nfree = 0;
  for (Index i = 0; i < n; ++i)
    if (reduced[i] == 0)
      reduced[i] = nfree++;
    else
      reduced[i] = -1;

  Eigen::VectorXd rhs(nfree);
  for (Index i = 0; i < n; ++i)
    if (reduced[i] >= 0)
      rhs[reduced[i]] = system.b[i];
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(system.A.nonZeros());
  for (Index col = 0; col < n; ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.A, col); it; ++it)
    {
      const Index row = static_cast<Index>(it.row());
      if (reduced[row] < 0)
        continue;
      if (reduced[col] >= 0)
        triplets.emplace_back(reduced[row], reduced[col], it.value());
      else
        rhs[reduced[row]] -= it.value() * x[col];
    }
  Eigen::SparseMatrix<double> A(nfree, nfree);
  A.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd xf;
  if (nfree > 0)
  {
#ifdef EQUILIBRA_HAVE_CHOLMOD
    Eigen::CholmodDecomposition<Eigen::SparseMatrix<double>, Eigen::Lower> solver;
#else
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
#endif
    solver.compute(A);
    if (solver.info() != Eigen::Success)
      throw SingularSystemError("sparse Cholesky factorisation failed");
    xf = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw SingularSystemError("sparse Cholesky solve failed");
    if (residual)
    {
      const double nb = rhs.norm();
      *residual = (A * xf - rhs).norm() / (nb > 0 ? nb : 1.0);
    }
  }
  else if (residual)
    *residual = 0;
  for (Index i = 0; i < n; ++i)
    if (reduced[i] >= 0)
      x[i] = xf[reduced[i]];
  return x;
}

PrimalSolution solve_poisson(const Mesh& mesh, int k, const PoissonProblem& problem,
                             int quadrature_degree)
{
  auto V = std::make_shared<FunctionSpace>(mesh, ReferenceElement::lagrange(k));
  const int qd = quadrature_degree > 0 ? quadrature_degree : 2 * k + 2;
  const SparseSystem sys = assemble_poisson(*V, problem, qd);
  PrimalSolution sol;
  sol.space = V;
  sol.quadrature_degree = qd;
  sol.u.emplace_back(V);
  sol.u[0].x = solve_constrained(sys, &sol.relative_residual);
  return sol;
}

PrimalSolution solve_elasticity(const Mesh& mesh, int k, const ElasticityProblem& problem,
                                int quadrature_degree)
{
  auto V = std::make_shared<FunctionSpace>(mesh, ReferenceElement::lagrange(k));
  const int qd = quadrature_degree > 0 ? quadrature_degree : 2 * k + 2;
  const SparseSystem sys = assemble_elasticity(*V, problem, qd);
  PrimalSolution sol;
  sol.space = V;
  sol.quadrature_degree = qd;
  const Eigen::VectorXd y = solve_constrained(sys, &sol.relative_residual);
  const Index n = V->num_dofs();
  for (int a = 0; a < 2; ++a)
  {
    sol.u.emplace_back(V);
    sol.u[a].x = y.segment(a * n, n);
  }
  return sol;
}

CellEvaluator poisson_flux(const PrimalSolution& uh, const PoissonProblem& problem)
{
  const FunctionSpace& V = *uh.space;
  auto cache = make_cache(V.element(), 2 * V.element().degree() + 2);
  const DiscreteFunction& u = uh.u[0];
  return [&V, &u, problem, cache](Index c, std::span<const Point> pts, Eigen::MatrixXd& values) {
    const Tabulation* tab = cache->find(pts);
    Tabulation local;
    if (!tab)
    {
      local = V.element().tabulate(pts);
      tab = &local;
    }
    const AffineMap map = V.mesh().affine_map(c);
    values = -cell_kappa(V.mesh(), c, problem) * evaluate_gradient(u, c, *tab, map);
  };
}

CellEvaluator elasticity_stress(const PrimalSolution& uh, double lambda)
{
  const FunctionSpace& V = *uh.space;
  auto cache = make_cache(V.element(), 2 * V.element().degree() + 2);
  const DiscreteFunction& u1 = uh.u[0];
  const DiscreteFunction& u2 = uh.u[1];
  return [&V, &u1, &u2, lambda, cache](Index c, std::span<const Point> pts,
                                       Eigen::MatrixXd& values) {
    const Tabulation* tab = cache->find(pts);
    Tabulation local;
    if (!tab)
    {
      local = V.element().tabulate(pts);
      tab = &local;
    }
    const AffineMap map = V.mesh().affine_map(c);
    const Eigen::MatrixXd g1 = evaluate_gradient(u1, c, *tab, map);
    const Eigen::MatrixXd g2 = evaluate_gradient(u2, c, *tab, map);
    values.resize(g1.rows(), 4);
    for (Eigen::Index p = 0; p < g1.rows(); ++p)
    {
      const double div = g1(p, 0) + g2(p, 1);
      const double shear = g1(p, 1) + g2(p, 0);
      values(p, 0) = 2 * g1(p, 0) + lambda * div;
      values(p, 1) = shear;
      values(p, 2) = shear;
      values(p, 3) = 2 * g2(p, 1) + lambda * div;
    }
  };
}

} // namespace equilibra
