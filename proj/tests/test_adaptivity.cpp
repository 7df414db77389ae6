#include "equilibra/adaptivity.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace equilibra;

namespace
{
Eigen::VectorXd vec(std::initializer_list<double> v)
{
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v)
    x[i++] = d;
  return x;
}

Mesh unit_square(int n)
{
  return create_rectangle(Point(0, 0), Point(1, 1), n, n,
                          [](const Point&, const Point&) { return FacetTag::Dirichlet; });
}
} // namespace

TEST_CASE("Doerfler marking")
{
  CHECK(mark_doerfler(vec({16, 9, 4, 1}), 0.5) == std::vector<Index>{0});
  CHECK(mark_doerfler(vec({1, 1, 1, 1}), 0.5) == std::vector<Index>{0, 1});
  CHECK(mark_doerfler(vec({1, 4, 9, 16}), 0.6) == std::vector<Index>{2, 3});
  // theta = 1 takes every cell with a nonzero indicator
  CHECK(mark_doerfler(vec({3, 0, 2, 1}), 1.0) == std::vector<Index>{0, 2, 3});
  // ties keep the cell order
  CHECK(mark_doerfler(vec({2, 2, 2}), 0.3) == std::vector<Index>{0});

  CHECK_THROWS_AS(mark_doerfler(vec({0, 0}), 0.5), ConfigurationError);
  CHECK_THROWS_AS(mark_doerfler(vec({1, -1}), 0.5), ConfigurationError);
  CHECK_THROWS_AS(mark_doerfler(vec({1, 2}), 0.0), ConfigurationError);
  CHECK_THROWS_AS(mark_doerfler(vec({1, 2}), 1.5), ConfigurationError);
}

TEST_CASE("bisection generations")
{
  const Mesh mesh = unit_square(2);
  const std::vector<Index> marked = {0, 5};
  for (int g = 1; g <= 3; ++g)
  {
    const Mesh fine = refine_generations(mesh, marked, g);
    double total = 0;
    double smallest = 1;
    for (Index c = 0; c < fine.num_cells(); ++c)
    {
      total += fine.area(c);
      smallest = std::min(smallest, fine.area(c));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // every descendant of a marked cell went through g bisections
    CHECK(smallest == doctest::Approx(mesh.area(0) / std::pow(2.0, g)).epsilon(1e-12));
  }
  CHECK(refine_generations(mesh, marked, 2).num_cells() >= mesh.num_cells() + 6);
  CHECK_THROWS_AS(refine_generations(mesh, marked, 0), ConfigurationError);
}

TEST_CASE("experimental order of convergence")
{
  CHECK(experimental_order(100, 1.0, 400, 0.5) == doctest::Approx(0.5));
  CHECK(experimental_order(10, 1e-2, 1000, 1e-4) == doctest::Approx(1.0));
}

TEST_CASE("adaptive loop bookkeeping")
{
  const Mesh mesh = unit_square(2);
  // error and estimate decay like n^{-1/2}, with the indicator on cell 0
  const LevelSolver solve = [](const Mesh& m, int) {
    LevelOutcome out;
    out.n_dof = m.num_cells();
    out.err = 1.0 / std::sqrt(double(out.n_dof));
    out.eta = 1.5 * out.err;
    out.eta_flux = out.eta;
    out.indicators = Eigen::VectorXd::Constant(m.num_cells(), 1e-3);
    out.indicators[0] = 1.0;
    out.t_prime = 0.25;
    out.t_eqlb = 0.5;
    return out;
  };

  AdaptiveOptions opt;
  opt.max_levels = 1;
  AdaptiveResult one = adaptive_loop(mesh, solve, opt);
  REQUIRE(one.history.size() == 1);
  CHECK(std::isnan(one.history[0].eoc));
  CHECK(one.final_mesh.num_cells() == mesh.num_cells());

  opt.max_levels = 5;
  int callbacks = 0;
  AdaptiveResult five = adaptive_loop(mesh, solve, opt,
                                      [&](const Mesh&, const LevelRecord&, const LevelOutcome&) { ++callbacks; });
  REQUIRE(five.history.size() == 5);
  CHECK(callbacks == 5);
  for (std::size_t l = 0; l < five.history.size(); ++l)
  {
    const LevelRecord& r = five.history[l];
    CHECK(r.level == static_cast<int>(l));
    CHECK(r.i_eff == doctest::Approx(1.5));
    CHECK(r.t_tot == 0.75);
    if (l > 0)
    {
      CHECK(r.n_dof > five.history[l - 1].n_dof);
      CHECK(r.eoc == doctest::Approx(0.5));
    }
  }

  // the error tolerance stops the loop at the first level that meets it
  opt.max_levels = 50;
  opt.err_tol = 1.0 / std::sqrt(12.0);
  AdaptiveResult tol = adaptive_loop(mesh, solve, opt);
  CHECK(tol.history.back().err <= opt.err_tol);
  for (std::size_t l = 0; l + 1 < tol.history.size(); ++l)
    CHECK(tol.history[l].err > opt.err_tol);
}
