#include "equilibra/benchmarks.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace equilibra;

namespace
{
// Closed form for the checkerboard coefficient: the leading exponent is
// (4 / pi) atan(r^{-1/2}) with r = max(kappa1, 1 / kappa1).
double checkerboard_alpha(double kappa1)
{
  const double r = std::max(kappa1, 1.0 / kappa1);
  return 4.0 / std::numbers::pi * std::atan(1.0 / std::sqrt(r));
}

std::filesystem::path scratch_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("equilibra_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

bool same_number(double a, double b)
{
  return (std::isnan(a) && std::isnan(b)) || a == b;
}
} // namespace

TEST_CASE("quadrant exponent matches the closed form")
{
  for (double kappa1 : {2.0, 5.0, 100.0, 0.2})
  {
    const QuadrantSolution s = quadrant_exact_solution(kappa1);
    CHECK(s.alpha == doctest::Approx(checkerboard_alpha(kappa1)).epsilon(1e-10));
  }
  CHECK(quadrant_exact_solution(100).alpha < quadrant_exact_solution(5).alpha);
  CHECK_THROWS_AS(quadrant_exact_solution(1.0), ConfigurationError);
}

TEST_CASE("quadrant solution satisfies the interface conditions")
{
  for (double kappa1 : {5.0, 100.0})
  {
    const QuadrantSolution s = quadrant_exact_solution(kappa1);
    const double eps = 1e-9;
    double worst_jump = 0, worst_flux = 0, scale = 0;
    for (double r : {0.1, 0.5, 0.9})
    {
      // the four half axes, each with the normal direction across it
      const Point axes[4] = {Point(r, 0), Point(0, r), Point(-r, 0), Point(0, -r)};
      const Point normals[4] = {Point(0, 1), Point(1, 0), Point(0, 1), Point(1, 0)};
      for (int i = 0; i < 4; ++i)
      {
        const Point plus = axes[i] + eps * normals[i];
        const Point minus = axes[i] - eps * normals[i];
        const double kp = s.kappa(QuadrantSolution::quadrant(plus));
        const double km = s.kappa(QuadrantSolution::quadrant(minus));
        CHECK(kp != km);
        worst_jump = std::max(worst_jump, std::abs(s.value(plus) - s.value(minus)));
        const double fp = kp * s.gradient(plus).dot(normals[i]);
        const double fm = km * s.gradient(minus).dot(normals[i]);
        worst_flux = std::max(worst_flux, std::abs(fp - fm));
        scale = std::max(scale, std::abs(fp) + std::abs(s.value(plus)));
      }
    }
    CHECK(scale > 0.1);
    CHECK(worst_jump < 1e-6 * scale);
    CHECK(worst_flux < 1e-6 * scale);

    // harmonic inside each quadrant, checked by a five point stencil
    const double h = 1e-3;
    for (const Point x : {Point(0.4, 0.3), Point(-0.2, 0.7), Point(-0.5, -0.5), Point(0.6, -0.1)})
    {
      const double lap = (s.value(x + Point(h, 0)) + s.value(x - Point(h, 0)) +
                          s.value(x + Point(0, h)) + s.value(x - Point(0, h)) - 4 * s.value(x)) /
                         (h * h);
      CHECK(std::abs(lap) < 1e-4);
    }
  }
}

TEST_CASE("Cook traction resultant")
{
  const Mesh mesh = cook_mesh();
  const ElasticityProblem p = cook_problem();
  Point resultant(0, 0);
  double clamped = 0;
  for (Index f = 0; f < mesh.num_facets(); ++f)
  {
    if (!mesh.on_boundary(f))
      continue;
    const auto& fv = mesh.facet(f);
    const Point mid = 0.5 * (mesh.vertex(fv[0]) + mesh.vertex(fv[1]));
    if (mesh.facet_tag(f) == FacetTag::Dirichlet)
    {
      CHECK(std::abs(mid.x()) < 1e-12);
      clamped += mesh.facet_length(f);
    }
    else
      resultant += mesh.facet_length(f) * p.traction(mid);
  }
  CHECK(clamped == doctest::Approx(44.0));
  CHECK(resultant.x() == doctest::Approx(0.0));
  CHECK(resultant.y() == doctest::Approx(16 * cook_traction));
  for (Index v = 0; v < mesh.num_vertices(); ++v)
    CHECK(count_interior_facets(mesh, v) >= 2);
}

TEST_CASE("config parsing")
{
  std::istringstream good("# comment\nproblem = cook\nk = 2\nm = 3  # trailing\n"
                          "estimator = heuristic\ntheta = 0.6\nerr_tol = 1e-3\n"
                          "output_dir = \"out dir\"\nvtk = true\nworkers = 2\n");
  const BenchmarkConfig c = parse_config(good);
  CHECK(c.problem == "cook");
  CHECK(c.k == 2);
  CHECK(c.m == 3);
  CHECK(c.estimator == EstimatorKind::Heuristic);
  CHECK(c.theta == 0.6);
  CHECK(c.err_tol == 1e-3);
  CHECK(c.output_dir == "out dir");
  CHECK(c.vtk);
  CHECK(c.workers == 2);
  CHECK_FALSE(c.use_weak_symmetry());

  BenchmarkConfig g;
  g.problem = "cook";
  g.k = 2;
  g.m = 2;
  CHECK(g.use_weak_symmetry());

  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try
    {
      parse_config(in);
    }
    catch (const ConfigurationError& e)
    {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("kapa1 = 5\n").find("kapa1") != std::string::npos);
  CHECK(error_of("k = two\n").find("'k'") != std::string::npos);
  CHECK(error_of("k = 2\nm = 1\n").find("'m'") != std::string::npos);
  CHECK(error_of("theta = 0\n").find("theta") != std::string::npos);
  CHECK(error_of("estimator = exact\n").find("estimator") != std::string::npos);
  CHECK(error_of("vtk = maybe\n").find("vtk") != std::string::npos);
  CHECK(error_of("problem = lshape\n").find("problem") != std::string::npos);
  CHECK(error_of("no equals sign\n").find("line 1") != std::string::npos);
  CHECK(error_of("problem = cook\nk = 1\nestimator = guaranteed\n").find("weak_symmetry") !=
        std::string::npos);
}

TEST_CASE("results.csv round trip")
{
  std::vector<LevelRecord> rows(3);
  for (int l = 0; l < 3; ++l)
  {
    LevelRecord& r = rows[l];
    r.level = l;
    r.n_cells = 32 << l;
    r.n_dof = 25 + 40 * l;
    r.err = 0.1 / (l + 3.0);
    r.eta = std::sqrt(2.0) * r.err;
    r.eta_flux = r.eta * (1 - 1e-17);
    r.eta_osc = 1e-300;
    r.eta_asym = 0;
    r.i_eff = r.eta / r.err;
    r.eoc = l == 0 ? std::nan("") : 1.0 / 3.0;
    r.t_prime = 1e-5 * l;
    r.t_eqlb = 2.5e-4;
    r.t_tot = r.t_prime + r.t_eqlb;
  }
  const Metadata meta = {{"problem", "cook"}, {"lambda", "2.333"}};
  std::stringstream buffer;
  write_results_csv(buffer, meta, rows);
  const std::string text = buffer.str();
  CHECK(text.rfind("# problem = cook\n# lambda = 2.333\n"
                   "level,n_cells,n_dof,err,eta,eta_flux,eta_osc,eta_asym,i_eff,eoc,t_prime,"
                   "t_eqlb,t_tot\n",
                   0) == 0);

  const ResultsTable back = read_results_csv(buffer);
  CHECK(back.metadata == meta);
  REQUIRE(back.history.size() == rows.size());
  for (std::size_t l = 0; l < rows.size(); ++l)
  {
    const LevelRecord& a = rows[l];
    const LevelRecord& b = back.history[l];
    CHECK(a.level == b.level);
    CHECK(a.n_cells == b.n_cells);
    CHECK(a.n_dof == b.n_dof);
    for (auto field : {&LevelRecord::err, &LevelRecord::eta, &LevelRecord::eta_flux,
                       &LevelRecord::eta_osc, &LevelRecord::eta_asym, &LevelRecord::i_eff,
                       &LevelRecord::eoc, &LevelRecord::t_prime, &LevelRecord::t_eqlb,
                       &LevelRecord::t_tot})
      CHECK(same_number(a.*field, b.*field));
  }

  std::istringstream bad_header("level,n_cells\n");
  CHECK_THROWS(read_results_csv(bad_header));
  std::istringstream bad_row("level,n_cells,n_dof,err,eta,eta_flux,eta_osc,eta_asym,i_eff,eoc,"
                             "t_prime,t_eqlb,t_tot\n0,1,2,x,0,0,0,0,0,0,0,0,0\n");
  CHECK_THROWS(read_results_csv(bad_row));
}

TEST_CASE("VTK output")
{
  const Mesh mesh = create_rectangle(Point(0, 0), Point(1, 1), 1, 1,
                                     [](const Point&, const Point&) { return FacetTag::Dirichlet; });
  std::ostringstream out;
  write_vtk(out, mesh, {{"eta", Eigen::Vector2d(0.5, 0.25)}});
  const std::string text = out.str();
  CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(text.find("POINTS 4 double") != std::string::npos);
  CHECK(text.find("CELLS 2 8") != std::string::npos);
  CHECK(text.find("CELL_DATA 2\nSCALARS eta double 1\nLOOKUP_TABLE default\n0.5\n0.25\n") !=
        std::string::npos);
  CHECK_THROWS(write_vtk(out, mesh, {{"bad", Eigen::Vector3d::Zero()}}));
}

TEST_CASE("single level run writes its outputs")
{
  const auto dir = scratch_dir("single_level");
  BenchmarkConfig c;
  c.max_levels = 1;
  c.output_dir = dir.string();
  c.vtk = true;
  const RunRecord record = run_benchmark(c);
  REQUIRE(record.history.size() == 1);
  CHECK(std::isnan(record.history[0].eoc));
  CHECK(record.history[0].i_eff >= 1.0);

  std::ifstream csv(dir / "results.csv");
  REQUIRE(csv);
  const ResultsTable table = read_results_csv(csv);
  REQUIRE(table.history.size() == 1);
  CHECK(table.history[0].eta == record.history[0].eta);
  bool has_kappa = false;
  for (const auto& [key, value] : table.metadata)
    has_kappa = has_kappa || (key == "kappa1" && value == "5");
  CHECK(has_kappa);
  CHECK(std::filesystem::exists(dir / "mesh_0.vtk"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("timing study rows")
{
  const auto rows = timing_study("poisson-quadrants", 1, 2, {2, 4});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].n_dof > rows[0].n_dof);
  for (const TimingRow& r : rows)
  {
    CHECK(r.t_tot == doctest::Approx(r.t_prime + r.t_eqlb));
    CHECK(r.ratio > 0);
    CHECK(r.ratio < 1);
  }
  CHECK_THROWS_AS(timing_study("cook", 2, 2, {4}), ConfigurationError);
  CHECK_THROWS_AS(timing_study("cook", 2, 1, {4, 8}), ConfigurationError);
}
