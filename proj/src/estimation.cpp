#include "equilibra/estimation.hpp"
#include "equilibra/quadrature.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

namespace equilibra
{

namespace
{
void check_same_mesh(const PrimalSolution& uh, const FunctionSpace& sigma_space)
{
  if (&uh.space->mesh() != &sigma_space.mesh())
    throw ConfigurationError("primal solution and equilibrated flux live on different meshes");
  if (sigma_space.element().family() != ElementFamily::RaviartThomas)
    throw ConfigurationError("equilibrated flux must be a Raviart-Thomas function");
}

void finish(ErrorEstimate& e)
{
  e.eta = std::sqrt(e.indicators.sum());
  e.eta_flux = std::sqrt(e.flux.squaredNorm());
  e.eta_osc = std::sqrt(e.osc.squaredNorm());
}

// Composite rule in reference coordinates, graded towards local vertex v
// by repeated splitting of the corner sub-triangle.
TriangleRule graded_rule(int degree, int v, int depth)
{
  const TriangleRule base = triangle_rule(degree);
  TriangleRule out;
  out.degree = degree;
  const Point verts[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
  Point p0 = verts[v], p1 = verts[(v + 1) % 3], p2 = verts[(v + 2) % 3];
  auto add = [&](const Point& a, const Point& b, const Point& c) {
    const double scale = std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    for (std::size_t q = 0; q < base.size(); ++q)
    {
      const Point& x = base.points[q];
      out.points.push_back(a + x.x() * (b - a) + x.y() * (c - a));
      out.weights.push_back(base.weights[q] * scale);
    }
  };
  for (int level = 0; level < depth; ++level)
  {
    const Point m01 = 0.5 * (p0 + p1), m02 = 0.5 * (p0 + p2), m12 = 0.5 * (p1 + p2);
    add(m01, p1, m12);
    add(m02, m12, p2);
    add(m01, m12, m02);
    p1 = m01;
    p2 = m02;
  }
  add(p0, p1, p2);
  return out;
}

std::string lineage_key(const Lineage& l, std::size_t length)
{
  return std::to_string(l.root) + '/' + l.path.substr(0, length);
}
} // namespace

ErrorEstimate estimate_poisson(const PrimalSolution& uh, const DiscreteFunction& sigma,
                               const PoissonProblem& problem, const EstimatorConstants&)
{
  check_same_mesh(uh, *sigma.space);
  const Mesh& mesh = uh.space->mesh();
  const int m = sigma.space->element().degree();
  const int k = uh.space->element().degree();
  const TriangleRule rule = triangle_rule(2 * std::max(m, k) + 4);
  const Tabulation rt_tab = sigma.space->element().tabulate(rule.points);
  const Tabulation lg_tab = uh.space->element().tabulate(rule.points);
  const Index nc = mesh.num_cells();

  ErrorEstimate e;
  e.flux = Eigen::VectorXd::Zero(nc);
  e.osc = Eigen::VectorXd::Zero(nc);
  e.asym = Eigen::VectorXd::Zero(nc);
  e.indicators = Eigen::VectorXd::Zero(nc);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < nc; ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    const double kappa = cell_kappa(mesh, c, problem);
    const Eigen::MatrixXd s = evaluate_rt(sigma, c, rt_tab, map);
    const Eigen::VectorXd d = evaluate_rt_divergence(sigma, c, rt_tab, map);
    const Eigen::MatrixXd g = evaluate_gradient(uh.u[0], c, lg_tab, map);
    double flux2 = 0, res2 = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const double w = rule.weights[q] * map.detJ;
      const Point diff = s.row(q).transpose() + kappa * g.row(q).transpose();
      flux2 += w * diff.squaredNorm() / kappa;
      const double f = problem.source ? problem.source(map.push_forward(rule.points[q])) : 0.0;
      res2 += w * (f - d[q]) * (f - d[q]);
    }
    e.flux[c] = std::sqrt(flux2);
    e.osc[c] = EstimatorConstants::poincare(mesh.diameter(c)) * std::sqrt(res2);
    const double eta = e.flux[c] + e.osc[c];
    e.indicators[c] = eta * eta;
  }
  finish(e);
  return e;
}

ErrorEstimate estimate_elasticity(const PrimalSolution& uh, const EquilibratedField& sigma,
                                  const ElasticityProblem& problem,
                                  const EstimatorConstants& constants)
{
  check_same_mesh(uh, *sigma.space);
  if (sigma.rows.size() != 2 || uh.u.size() != 2)
    throw ConfigurationError("elasticity estimate needs two stress rows and two displacements");
  if (!(constants.ck > 0))
    throw ConfigurationError("C_K must be positive");
  const Mesh& mesh = uh.space->mesh();
  const int m = sigma.space->element().degree();
  const int k = uh.space->element().degree();
  const TriangleRule rule = triangle_rule(2 * std::max(m, k) + 4);
  const Tabulation rt_tab = sigma.space->element().tabulate(rule.points);
  const Tabulation lg_tab = uh.space->element().tabulate(rule.points);
  const double lambda = problem.lambda;
  const double a_trace = lambda / (2.0 * (1.0 + lambda));
  const Index nc = mesh.num_cells();

  ErrorEstimate e;
  e.flux = Eigen::VectorXd::Zero(nc);
  e.osc = Eigen::VectorXd::Zero(nc);
  e.asym = Eigen::VectorXd::Zero(nc);
  e.indicators = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd combined = Eigen::VectorXd::Zero(nc);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < nc; ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    const Eigen::MatrixXd s1 = evaluate_rt(sigma.rows[0], c, rt_tab, map);
    const Eigen::MatrixXd s2 = evaluate_rt(sigma.rows[1], c, rt_tab, map);
    const Eigen::VectorXd d1 = evaluate_rt_divergence(sigma.rows[0], c, rt_tab, map);
    const Eigen::VectorXd d2 = evaluate_rt_divergence(sigma.rows[1], c, rt_tab, map);
    const Eigen::MatrixXd g1 = evaluate_gradient(uh.u[0], c, lg_tab, map);
    const Eigen::MatrixXd g2 = evaluate_gradient(uh.u[1], c, lg_tab, map);
    double a2 = 0, skw2 = 0, res2 = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const double w = rule.weights[q] * map.detJ;
      const double div = g1(q, 0) + g2(q, 1);
      Eigen::Matrix2d sh;
      sh << 2 * g1(q, 0) + lambda * div, g1(q, 1) + g2(q, 0), g1(q, 1) + g2(q, 0),
          2 * g2(q, 1) + lambda * div;
      Eigen::Matrix2d sr;
      sr << s1(q, 0), s1(q, 1), s2(q, 0), s2(q, 1);
      const Eigen::Matrix2d tau = sr - sh;
      const Eigen::Matrix2d Atau = 0.5 * (tau - a_trace * tau.trace() * Eigen::Matrix2d::Identity());
      a2 += w * (Atau.array() * tau.array()).sum();
      const double asym = sr(0, 1) - sr(1, 0);
      skw2 += w * 0.5 * asym * asym;
      const Point f = problem.body_force ? problem.body_force(map.push_forward(rule.points[q]))
                                         : Point(0, 0);
      res2 += w * (Point(f.x() + d1[q], f.y() + d2[q])).squaredNorm();
    }
    e.flux[c] = std::sqrt(std::max(a2, 0.0));
    e.asym[c] = std::sqrt(skw2);
    e.osc[c] = EstimatorConstants::poincare(mesh.diameter(c)) * std::sqrt(res2);
    const double t = e.asym[c] + e.osc[c];
    combined[c] = constants.ck * t * t;
    e.indicators[c] = e.flux[c] * e.flux[c] + combined[c];
  }
  finish(e);
  e.eta_asym = std::sqrt(combined.sum());
  return e;
}

ErrorEstimate estimate_heuristic(const PrimalSolution& uh, const EquilibratedField& sigma,
                                 const ElasticityProblem& problem)
{
  check_same_mesh(uh, *sigma.space);
  if (sigma.rows.size() != 2 || uh.u.size() != 2)
    throw ConfigurationError("elasticity estimate needs two stress rows and two displacements");
  const Mesh& mesh = uh.space->mesh();
  const int m = sigma.space->element().degree();
  const int k = uh.space->element().degree();
  const TriangleRule rule = triangle_rule(2 * std::max(m, k) + 2);
  const Tabulation rt_tab = sigma.space->element().tabulate(rule.points);
  const Tabulation lg_tab = uh.space->element().tabulate(rule.points);
  const double lambda = problem.lambda;
  const double a_trace = lambda / (2.0 * (1.0 + lambda));
  const Index nc = mesh.num_cells();

  ErrorEstimate e;
  e.flux = Eigen::VectorXd::Zero(nc);
  e.osc = Eigen::VectorXd::Zero(nc);
  e.asym = Eigen::VectorXd::Zero(nc);
  e.indicators = Eigen::VectorXd::Zero(nc);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < nc; ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    const Eigen::MatrixXd s1 = evaluate_rt(sigma.rows[0], c, rt_tab, map);
    const Eigen::MatrixXd s2 = evaluate_rt(sigma.rows[1], c, rt_tab, map);
    const Eigen::MatrixXd g1 = evaluate_gradient(uh.u[0], c, lg_tab, map);
    const Eigen::MatrixXd g2 = evaluate_gradient(uh.u[1], c, lg_tab, map);
    double a2 = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const double w = rule.weights[q] * map.detJ;
      const double div = g1(q, 0) + g2(q, 1);
      const double shear = g1(q, 1) + g2(q, 0);
      Eigen::Matrix2d tau;
      tau << s1(q, 0) - (2 * g1(q, 0) + lambda * div), s1(q, 1) - shear, s2(q, 0) - shear,
          s2(q, 1) - (2 * g2(q, 1) + lambda * div);
      const Eigen::Matrix2d Atau = 0.5 * (tau - a_trace * tau.trace() * Eigen::Matrix2d::Identity());
      a2 += w * (Atau.array() * tau.array()).sum();
    }
    a2 = std::max(a2, 0.0);
    e.flux[c] = std::sqrt(a2);
    e.indicators[c] = a2;
  }
  finish(e);
  return e;
}

double poisson_error(const PrimalSolution& uh, const PoissonProblem& problem,
                     const std::function<Point(const Point&)>& exact_gradient,
                     std::optional<Point> singular_point)
{
  if (!exact_gradient)
    throw ConfigurationError("the true error needs a reference solution");
  const Mesh& mesh = uh.space->mesh();
  const int k = uh.space->element().degree();
  const TriangleRule rule = triangle_rule(2 * k + 6);
  const Tabulation tab = uh.space->element().tabulate(rule.points);
  const Index nc = mesh.num_cells();
  Eigen::VectorXd err2 = Eigen::VectorXd::Zero(nc);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < nc; ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    const double kappa = cell_kappa(mesh, c, problem);
    int singular_vertex = -1;
    if (singular_point)
      for (int v = 0; v < 3; ++v)
        if ((mesh.vertex(mesh.cell(c)[v]) - *singular_point).norm() <= 1e-14)
          singular_vertex = v;
    double e2 = 0;
    if (singular_vertex < 0)
    {
      const Eigen::MatrixXd g = evaluate_gradient(uh.u[0], c, tab, map);
      for (std::size_t q = 0; q < rule.size(); ++q)
      {
        const Point diff = exact_gradient(map.push_forward(rule.points[q])) - g.row(q).transpose();
        e2 += rule.weights[q] * map.detJ * kappa * diff.squaredNorm();
      }
    }
    else
    {
      const TriangleRule graded = graded_rule(2 * k + 6, singular_vertex, 48);
      const Tabulation gtab = uh.space->element().tabulate(graded.points);
      const Eigen::MatrixXd g = evaluate_gradient(uh.u[0], c, gtab, map);
      for (std::size_t q = 0; q < graded.size(); ++q)
      {
        const Point diff = exact_gradient(map.push_forward(graded.points[q])) - g.row(q).transpose();
        e2 += graded.weights[q] * map.detJ * kappa * diff.squaredNorm();
      }
    }
    err2[c] = e2;
  }
  return std::sqrt(err2.sum());
}

double elasticity_error(const PrimalSolution& uh, const PrimalSolution& reference, double lambda)
{
  const Mesh& a = uh.space->mesh();
  const Mesh& b = reference.space->mesh();
  std::unordered_map<std::string, Index> a_cells, b_cells;
  for (Index c = 0; c < a.num_cells(); ++c)
    a_cells.emplace(lineage_key(a.lineage(c), a.lineage(c).path.size()), c);
  for (Index c = 0; c < b.num_cells(); ++c)
    b_cells.emplace(lineage_key(b.lineage(c), b.lineage(c).path.size()), c);

  // overlapping pairs (cell of a, cell of b), integrated over the finer one
  struct Pair
  {
    Index ca, cb;
    bool over_a;
  };
  std::vector<Pair> pairs;
  for (Index c = 0; c < a.num_cells(); ++c)
  {
    const Lineage& l = a.lineage(c);
    for (std::size_t len = l.path.size() + 1; len-- > 0;)
      if (auto it = b_cells.find(lineage_key(l, len)); it != b_cells.end())
      {
        pairs.push_back({c, it->second, true});
        break;
      }
  }
  for (Index c = 0; c < b.num_cells(); ++c)
  {
    const Lineage& l = b.lineage(c);
    for (std::size_t len = l.path.size(); len-- > 0;)
      if (auto it = a_cells.find(lineage_key(l, len)); it != a_cells.end())
      {
        pairs.push_back({it->second, c, false});
        break;
      }
  }

  const int degree = 2 * std::max(uh.space->element().degree(), reference.space->element().degree());
  const TriangleRule rule = triangle_rule(degree);
  const auto np = static_cast<Eigen::Index>(pairs.size());
  Eigen::VectorXd err2 = Eigen::VectorXd::Zero(np);
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < np; ++p)
  {
    const Pair& pr = pairs[p];
    const AffineMap ma = a.affine_map(pr.ca);
    const AffineMap mb = b.affine_map(pr.cb);
    const AffineMap& fine = pr.over_a ? ma : mb;
    std::vector<Point> xa, xb;
    for (const Point& x : rule.points)
    {
      const Point phys = fine.push_forward(x);
      xa.push_back(ma.pull_back(phys));
      xb.push_back(mb.pull_back(phys));
    }
    const Tabulation ta = uh.space->element().tabulate(xa);
    const Tabulation tb = reference.space->element().tabulate(xb);
    const Eigen::MatrixXd ga1 = evaluate_gradient(uh.u[0], pr.ca, ta, ma);
    const Eigen::MatrixXd ga2 = evaluate_gradient(uh.u[1], pr.ca, ta, ma);
    const Eigen::MatrixXd gb1 = evaluate_gradient(reference.u[0], pr.cb, tb, mb);
    const Eigen::MatrixXd gb2 = evaluate_gradient(reference.u[1], pr.cb, tb, mb);
    double e2 = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const double e11 = gb1(q, 0) - ga1(q, 0);
      const double e22 = gb2(q, 1) - ga2(q, 1);
      const double e12 = 0.5 * (gb1(q, 1) - ga1(q, 1) + gb2(q, 0) - ga2(q, 0));
      const double div = e11 + e22;
      e2 += rule.weights[q] * fine.detJ * (e11 * e11 + e22 * e22 + 2 * e12 * e12 + lambda * div * div);
    }
    err2[p] = e2;
  }
  return std::sqrt(err2.sum());
}

} // namespace equilibra
