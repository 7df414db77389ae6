#include "equilibra/equilibration.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

using namespace equilibra;

namespace
{
FacetTag all_dirichlet(const Point&, const Point&) { return FacetTag::Dirichlet; }
} // namespace

TEST_CASE("Poisson fluxes satisfy the equilibration constraints on the unit square")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 6, 6, all_dirichlet);
  PoissonProblem p;
  p.source = [](const Point&) { return 1.0; };
  for (int k = 1; k <= 2; ++k)
  {
    const PrimalSolution uh = solve_poisson(mesh, k, p);
    for (int m = k; m <= k + 1; ++m)
    {
      CAPTURE(k);
      CAPTURE(m);
      EquilibrationOptions opt;
      opt.m = m;
      opt.primal_degree = k;
      const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, p, m), opt);
      const auto r = oracle::definition1_residuals(s.rows[0], m, p.source, nullptr);
      CHECK(r.divergence <= 1e-10);
      CHECK(r.jump <= 1e-10);
      CHECK(r.neumann <= 1e-10);
    }
  }
}

namespace
{
Mesh cantilever(int nx, int ny)
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(4, 1), nx, ny, [](const Point& a, const Point& b) {
    return (a.x() < 1e-12 && b.x() < 1e-12) ? FacetTag::Dirichlet : FacetTag::Neumann;
  });
  return enforce_patch_condition(split_corners(mesh));
}

ElasticityProblem shear_load()
{
  ElasticityProblem p;
  p.lambda = 2.333;
  p.traction = [](const Point& x) { return x.x() > 4 - 1e-12 ? Point(0, 0.1) : Point(0, 0); };
  return p;
}
} // namespace

TEST_CASE("elasticity stresses satisfy the constraints with and without weak symmetry")
{
  const Mesh mesh = cantilever(8, 2);
  const ElasticityProblem p = shear_load();
  for (int k = 2; k <= 3; ++k)
  {
    const PrimalSolution uh = solve_elasticity(mesh, k, p);
    for (int m = k; m <= k + 1; ++m)
      for (bool ws : {false, true})
      {
        CAPTURE(k);
        CAPTURE(m);
        CAPTURE(ws);
        EquilibrationOptions opt;
        opt.m = m;
        opt.primal_degree = k;
        opt.weak_symmetry = ws;
        const EquilibratedField s = equilibrate(mesh, elasticity_flux_rows(uh, p, m), opt);
        for (int i = 0; i < 2; ++i)
        {
          auto t = [&p, i](const Point& x) { return p.traction(x)[i]; };
          const auto r = oracle::definition1_residuals(s.rows[i], m, [](const Point&) { return 0.0; }, t);
          CHECK(r.divergence <= 1e-10);
          CHECK(r.jump <= 1e-10);
          CHECK(r.neumann <= 1e-10);
        }
        const double sym = oracle::weak_symmetry_residual(s.rows[0], s.rows[1]);
        if (ws)
          CHECK(sym <= 1e-10);
        else
          CHECK(sym > 1e-6);
      }
  }
}

TEST_CASE("serial and parallel equilibration agree bit for bit")
{
  const Mesh mesh = cantilever(8, 2);
  const ElasticityProblem p = shear_load();
  const PrimalSolution uh = solve_elasticity(mesh, 2, p);
  EquilibrationOptions opt;
  opt.m = 3;
  opt.primal_degree = 2;
  opt.weak_symmetry = true;
  opt.execution = Execution::Serial;
  const EquilibratedField a = equilibrate(mesh, elasticity_flux_rows(uh, p, 3), opt);
  opt.execution = Execution::Parallel;
  const EquilibratedField b = equilibrate(mesh, elasticity_flux_rows(uh, p, 3), opt);
  for (int i = 0; i < 2; ++i)
    CHECK((a.rows[i].x.array() == b.rows[i].x.array()).all());
}

TEST_CASE("polynomial Poisson fluxes are reproduced for every m >= k")
{
  Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 3, 3, all_dirichlet);
  for (int round = 0; round < 4; ++round)
  {
    std::vector<Index> marked;
    for (Index c = 0; c < mesh.num_cells(); ++c)
      if (mesh.affine_map(c).push_forward(Point(1.0 / 3, 1.0 / 3)).norm() < 0.5)
        marked.push_back(c);
    mesh = refine(mesh, marked);
  }

  struct Case
  {
    int k;
    std::function<double(const Point&)> u;
    std::function<Point(const Point&)> flux;
    double f;
  };
  const Case cases[] = {
      {1, [](const Point& x) { return 2 * x.x() - x.y(); }, [](const Point&) { return Point(-2, 1); }, 0.0},
      {2, [](const Point& x) { return x.x() * x.x() + x.x() * x.y(); },
       [](const Point& x) { return Point(-2 * x.x() - x.y(), -x.x()); }, -2.0},
  };
  for (const Case& cs : cases)
    for (int m = cs.k; m <= 3; ++m)
    {
      PoissonProblem p;
      p.dirichlet = cs.u;
      const double f = cs.f;
      p.source = [f](const Point&) { return f; };
      const PrimalSolution uh = solve_poisson(mesh, cs.k, p);
      EquilibrationOptions opt;
      opt.m = m;
      opt.primal_degree = cs.k;
      const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, p, m), opt);
      const TriangleRule rule = triangle_rule(2 * m + 2);
      const Tabulation tab = s.space->element().tabulate(rule.points);
      double worst = 0;
      for (Index c = 0; c < mesh.num_cells(); ++c)
      {
        const AffineMap map = mesh.affine_map(c);
        const Eigen::MatrixXd v = evaluate_rt(s.rows[0], c, tab, map);
        for (std::size_t q = 0; q < rule.size(); ++q)
        {
          const Point exact = cs.flux(map.push_forward(rule.points[q]));
          worst = std::max(worst, (v.row(static_cast<Eigen::Index>(q)).transpose() - exact).norm());
        }
      }
      CAPTURE(cs.k);
      CAPTURE(m);
      CHECK(worst <= 1e-11);
    }
}

TEST_CASE("invalid equilibration requests are rejected")
{
  const Mesh square = create_rectangle(Point(0, 0), Point(1, 1), 2, 2, all_dirichlet);
  PoissonProblem p;
  const PrimalSolution uh = solve_poisson(square, 2, p);
  CHECK_THROWS_AS(poisson_flux_rows(uh, p, 1), ConfigurationError);
  EquilibrationOptions opt;
  opt.m = 1;
  opt.primal_degree = 2;
  CHECK_THROWS_AS(equilibrate(square, poisson_flux_rows(uh, p, 2), opt), ConfigurationError);

  // the corner cells of an unsplit rectangle leave vertices with one interior facet
  const Mesh raw = create_rectangle(Point(0, 0), Point(4, 1), 4, 1, [](const Point& a, const Point& b) {
    return (a.x() < 1e-12 && b.x() < 1e-12) ? FacetTag::Dirichlet : FacetTag::Neumann;
  });
  const ElasticityProblem e = shear_load();
  const PrimalSolution vh = solve_elasticity(raw, 2, e);
  opt.m = 2;
  opt.weak_symmetry = true;
  try
  {
    equilibrate(raw, elasticity_flux_rows(vh, e, 2), opt);
    FAIL("expected a mesh error");
  }
  catch (const MeshError& err)
  {
    CHECK(std::string(err.what()).find("vertex ") != std::string::npos);
  }
}
