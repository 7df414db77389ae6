#include "equilibra/estimation.hpp"
#include "equilibra/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace equilibra;

namespace
{
FacetTag all_dirichlet(const Point&, const Point&) { return FacetTag::Dirichlet; }

struct OrthogonalityTerms
{
  double error2 = 0, dual2 = 0, estimate2 = 0;
};

// ||grad(u - u_h)||^2, ||s + grad u||^2 and ||s + grad u_h||^2 by direct
// quadrature (kappa = 1)
OrthogonalityTerms orthogonality_terms(const PrimalSolution& uh, const DiscreteFunction& s,
                                       const std::function<Point(const Point&)>& grad_u)
{
  const Mesh& mesh = uh.space->mesh();
  const TriangleRule rule = triangle_rule(14);
  const Tabulation lt = uh.space->element().tabulate(rule.points);
  const Tabulation rt = s.space->element().tabulate(rule.points);
  OrthogonalityTerms t;
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    const AffineMap map = mesh.affine_map(c);
    const Eigen::MatrixXd g = evaluate_gradient(uh.u[0], c, lt, map);
    const Eigen::MatrixXd v = evaluate_rt(s, c, rt, map);
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const double w = rule.weights[q] * map.detJ;
      const Point gu = grad_u(map.push_forward(rule.points[q]));
      const Point gh = g.row(q).transpose();
      const Point sv = v.row(q).transpose();
      t.error2 += w * (gu - gh).squaredNorm();
      t.dual2 += w * (sv + gu).squaredNorm();
      t.estimate2 += w * (sv + gh).squaredNorm();
    }
  }
  return t;
}

PoissonProblem bubble_problem()
{
  PoissonProblem p;
  p.source = [](const Point& x) { return 2 * (x.y() * (1 - x.y()) + x.x() * (1 - x.x())); };
  return p;
}

Point bubble_gradient(const Point& x)
{
  return Point((1 - 2 * x.x()) * x.y() * (1 - x.y()), (1 - 2 * x.y()) * x.x() * (1 - x.x()));
}
} // namespace

TEST_CASE("equilibrated fluxes satisfy the Prager-Synge identity")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 5, 4, all_dirichlet);
  const PoissonProblem p = bubble_problem();
  for (int k = 1; k <= 2; ++k)
  {
    const PrimalSolution uh = solve_poisson(mesh, k, p);
    // m = 3 reproduces the quadratic source exactly
    EquilibrationOptions opt;
    opt.m = 3;
    opt.primal_degree = k;
    const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, p, 3), opt);
    const OrthogonalityTerms t = orthogonality_terms(uh, s.rows[0], bubble_gradient);
    CAPTURE(k);
    CHECK(std::abs(t.error2 + t.dual2 - t.estimate2) <= 1e-8 * t.estimate2);

    const ErrorEstimate e = estimate_poisson(uh, s.rows[0], p);
    CHECK(e.eta_osc <= 1e-10 * e.eta);
    CHECK(e.eta == doctest::Approx(std::sqrt(t.estimate2)).epsilon(1e-10));
    const double err = poisson_error(uh, p, bubble_gradient);
    CHECK(err == doctest::Approx(std::sqrt(t.error2)).epsilon(1e-10));
    CHECK(e.eta >= err);
  }
}

TEST_CASE("the Poisson estimator vanishes for a linear solution")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 4, 4, all_dirichlet);
  PoissonProblem p;
  p.dirichlet = [](const Point& x) { return x.x() + 2 * x.y(); };
  const PrimalSolution uh = solve_poisson(mesh, 1, p);
  EquilibrationOptions opt;
  opt.m = 2;
  opt.primal_degree = 1;
  const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, p, 2), opt);
  const ErrorEstimate e = estimate_poisson(uh, s.rows[0], p);
  CHECK(e.eta <= 1e-12);
}

TEST_CASE("Poisson indicators add up to the total estimate")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 4, 3, all_dirichlet);
  PoissonProblem p;
  p.source = [](const Point& x) { return std::sin(3 * x.x()) * std::exp(x.y()); };
  p.kappa = [](const Point& x) { return x.x() < 0.5 ? 3.0 : 1.0; };
  const PrimalSolution uh = solve_poisson(mesh, 1, p);
  EquilibrationOptions opt;
  opt.m = 1;
  const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, p, 1), opt);
  const ErrorEstimate e = estimate_poisson(uh, s.rows[0], p);
  CHECK(e.eta_osc > 0);
  double sum = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    const double eta = e.flux[c] + e.osc[c];
    CHECK(e.indicators[c] == doctest::Approx(eta * eta).epsilon(1e-14));
    sum += eta * eta;
  }
  CHECK(e.eta == doctest::Approx(std::sqrt(sum)).epsilon(1e-14));
  CHECK(e.eta_flux == doctest::Approx(e.flux.norm()).epsilon(1e-14));
}

TEST_CASE("the singular corner is integrated accurately")
{
  // u = r^{1/2} against u_h = 0: ||grad u||^2 = ln(1 + sqrt 2) / 2 on the unit square
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 4, 4, all_dirichlet);
  const PrimalSolution uh = solve_poisson(mesh, 1, PoissonProblem{});
  auto grad = [](const Point& x) { return Point(0.5 * x / std::pow(x.norm(), 1.5)); };
  const double err = poisson_error(uh, PoissonProblem{}, grad, Point(0, 0));
  CHECK(err * err == doctest::Approx(0.5 * std::log(1 + std::sqrt(2.0))).epsilon(1e-9));
}

namespace
{
Mesh clamped_block()
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(2, 1), 4, 2, [](const Point& a, const Point& b) {
    return (a.x() < 1e-12 && b.x() < 1e-12) ? FacetTag::Dirichlet : FacetTag::Neumann;
  });
  return enforce_patch_condition(split_corners(mesh));
}
} // namespace

TEST_CASE("the elasticity estimator vanishes for an affine displacement")
{
  const Mesh mesh = clamped_block();
  ElasticityProblem p;
  p.lambda = 2.333;
  // u = (0.3x + 0.1y, 0.2x - 0.4y): eps = [[0.3, 0.15], [0.15, -0.4]]
  const double l = p.lambda;
  Eigen::Matrix2d sigma;
  sigma << 0.6 + l * -0.1, 0.3, 0.3, -0.8 + l * -0.1;
  p.dirichlet = [](const Point& x) { return Point(0.3 * x.x() + 0.1 * x.y(), 0.2 * x.x() - 0.4 * x.y()); };
  p.traction = [sigma](const Point& x) {
    Point n(0, 0);
    if (x.x() > 2 - 1e-12)
      n = Point(1, 0);
    else if (x.y() > 1 - 1e-12)
      n = Point(0, 1);
    else if (x.y() < 1e-12)
      n = Point(0, -1);
    return Point(sigma * n);
  };
  const PrimalSolution uh = solve_elasticity(mesh, 2, p);
  for (bool ws : {false, true})
  {
    EquilibrationOptions opt;
    opt.m = 2;
    opt.primal_degree = 2;
    opt.weak_symmetry = ws;
    const EquilibratedField s = equilibrate(mesh, elasticity_flux_rows(uh, p, 2), opt);
    const ErrorEstimate e = estimate_elasticity(uh, s, p);
    CAPTURE(ws);
    CHECK(e.eta <= 1e-10);
    CHECK(e.eta_asym <= 1e-10);
    CHECK(estimate_heuristic(uh, s, p).eta <= 1e-10);
  }
}

TEST_CASE("elasticity indicators combine the flux, asymmetry and residual terms")
{
  const Mesh mesh = clamped_block();
  ElasticityProblem p;
  p.lambda = 2.333;
  p.body_force = [](const Point& x) { return Point(std::cos(x.y()), x.x() * x.x()); };
  p.traction = [](const Point& x) { return x.x() > 2 - 1e-12 ? Point(0, 0.03) : Point(0, 0); };
  const PrimalSolution uh = solve_elasticity(mesh, 2, p);
  EquilibrationOptions opt;
  opt.m = 2;
  opt.primal_degree = 2;
  const EquilibratedField s = equilibrate(mesh, elasticity_flux_rows(uh, p, 2), opt);
  EstimatorConstants ck;
  ck.ck = 0.7;
  const ErrorEstimate e = estimate_elasticity(uh, s, p, ck);
  CHECK(e.eta_asym > 0);
  CHECK(e.eta_osc > 0);
  double sum = 0, combined = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
  {
    const double t = e.asym[c] + e.osc[c];
    CHECK(e.indicators[c] == doctest::Approx(e.flux[c] * e.flux[c] + 0.7 * t * t).epsilon(1e-13));
    sum += e.indicators[c];
    combined += 0.7 * t * t;
  }
  CHECK(e.eta == doctest::Approx(std::sqrt(sum)).epsilon(1e-13));
  CHECK(e.eta_asym == doctest::Approx(std::sqrt(combined)).epsilon(1e-13));
  CHECK(e.eta * e.eta == doctest::Approx(e.eta_flux * e.eta_flux + e.eta_asym * e.eta_asym).epsilon(1e-12));

  ElasticityProblem zero;
  CHECK_THROWS_AS(estimate_elasticity(uh, s, zero, EstimatorConstants{0.0}), ConfigurationError);
}

TEST_CASE("the elasticity error matches direct integration across non-nested meshes")
{
  // reference: exact quadratic on a mesh refined towards one corner; candidate:
  // a linear interpolant on a different refinement of the same initial mesh
  const Mesh initial = create_rectangle(Point(0, 0), Point(1, 1), 2, 2, all_dirichlet);
  std::vector<Index> marked_a = {0, 3};
  const Mesh a = refine(refine_uniform(initial, 1), marked_a);
  std::vector<Index> marked_b = {1, 2, 5};
  const Mesh b = refine(refine(initial, marked_b), marked_b);
  auto ux = [](const Point& x) { return x.x() * x.y() + 0.5 * x.y() * x.y(); };
  auto uy = [](const Point& x) { return x.x() * x.x() - x.y(); };
  const double lambda = 1.7;

  auto solution = [](const Mesh& mesh, int k, const ScalarField& fx, const ScalarField& fy) {
    PrimalSolution s;
    auto V = std::make_shared<FunctionSpace>(mesh, ReferenceElement::lagrange(k));
    s.space = V;
    s.u = {interpolate_lagrange(V, fx), interpolate_lagrange(V, fy)};
    return s;
  };
  const PrimalSolution ref = solution(b, 2, ux, uy);
  const PrimalSolution uh = solution(a, 1, ux, uy);

  // direct: integrate on the cells of a against the exact gradients
  const TriangleRule rule = triangle_rule(6);
  const Tabulation tab = uh.space->element().tabulate(rule.points);
  double direct = 0;
  for (Index c = 0; c < a.num_cells(); ++c)
  {
    const AffineMap map = a.affine_map(c);
    const Eigen::MatrixXd g1 = evaluate_gradient(uh.u[0], c, tab, map);
    const Eigen::MatrixXd g2 = evaluate_gradient(uh.u[1], c, tab, map);
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const Point x = map.push_forward(rule.points[q]);
      const double e11 = x.y() - g1(q, 0);
      const double e22 = -1 - g2(q, 1);
      const double e12 = 0.5 * (x.x() + x.y() - g1(q, 1) + 2 * x.x() - g2(q, 0));
      const double div = e11 + e22;
      direct += rule.weights[q] * map.detJ * (e11 * e11 + e22 * e22 + 2 * e12 * e12 + lambda * div * div);
    }
  }
  CHECK(elasticity_error(uh, ref, lambda) == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));
  CHECK(elasticity_error(ref, ref, lambda) == doctest::Approx(0.0));
}
