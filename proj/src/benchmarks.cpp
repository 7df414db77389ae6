#include "equilibra/benchmarks.hpp"
#include "equilibra/equilibration.hpp"
#include "equilibra/estimation.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>

namespace equilibra
{

namespace
{
constexpr double pi = 3.14159265358979323846;

Eigen::Matrix2d propagator(double alpha, double kappa)
{
  const double c = std::cos(alpha * pi / 2), s = std::sin(alpha * pi / 2);
  Eigen::Matrix2d P;
  P << c, s / (alpha * kappa), -alpha * kappa * s, c;
  return P;
}

// state (mu, kappa mu') is carried counter-clockwise through the quadrants
Eigen::Matrix2d transfer(double alpha, double kappa1)
{
  Eigen::Matrix2d T = Eigen::Matrix2d::Identity();
  for (int q = 0; q < 4; ++q)
    T = propagator(alpha, q % 2 == 0 ? kappa1 : 1.0) * T;
  return T;
}

double characteristic(double alpha, double kappa1)
{
  return (transfer(alpha, kappa1) - Eigen::Matrix2d::Identity()).determinant();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool parse_bool(const std::string& key, const std::string& v)
{
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  throw ConfigurationError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

double parse_number(const std::string& key, const std::string& v)
{
  std::size_t used = 0;
  double x = 0;
  try
  {
    x = std::stod(v, &used);
  }
  catch (const std::exception&)
  {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw ConfigurationError("config key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

int parse_int(const std::string& key, const std::string& v)
{
  const double x = parse_number(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e9)
    throw ConfigurationError("config key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string estimator_name(EstimatorKind e)
{
  return e == EstimatorKind::Guaranteed ? "guaranteed" : "heuristic";
}

struct CookReference
{
  Mesh mesh;
  PrimalSolution solution;
};

constexpr Index cook_reference_dofs = 30000;

std::unique_ptr<CookReference> compute_cook_reference()
{
  const ElasticityProblem p = cook_problem();
  Mesh mesh = cook_mesh();
  for (;;)
  {
    const PrimalSolution uh = solve_elasticity(mesh, 3, p);
    if (uh.num_dofs() >= cook_reference_dofs)
      break;
    EquilibrationOptions opt;
    opt.m = 3;
    opt.primal_degree = 3;
    const EquilibratedField s = equilibrate(mesh, elasticity_flux_rows(uh, p, 3), opt);
    const ErrorEstimate e = estimate_heuristic(uh, s, p);
    mesh = refine_generations(mesh, mark_doerfler(e.indicators, 0.6), 2);
  }
  auto ref = std::make_unique<CookReference>();
  ref->mesh = refine_uniform(mesh, 2);
  ref->solution = solve_elasticity(ref->mesh, 4, p);
  return ref;
}

LevelOutcome poisson_level(const Mesh& mesh, const BenchmarkConfig& cfg,
                           const QuadrantSolution& exact, const PoissonProblem& problem)
{
  LevelOutcome out;
  auto t0 = std::chrono::steady_clock::now();
  const PrimalSolution uh = solve_poisson(mesh, cfg.k, problem);
  out.t_prime = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  EquilibrationOptions opt;
  opt.m = cfg.m;
  opt.primal_degree = cfg.k;
  opt.cell_weight = inverse_kappa(mesh, problem);
  const EquilibratedField s = equilibrate(mesh, poisson_flux_rows(uh, problem, cfg.m), opt);
  out.t_eqlb = seconds_since(t0);
  const ErrorEstimate e = estimate_poisson(uh, s.rows[0], problem);
  out.n_dof = uh.num_dofs();
  out.err = poisson_error(uh, problem, [&exact](const Point& x) { return exact.gradient(x); },
                          Point(0, 0));
  out.eta = e.eta;
  out.eta_flux = e.eta_flux;
  out.eta_osc = e.eta_osc;
  out.eta_asym = e.eta_asym;
  out.indicators = e.indicators;
  return out;
}

LevelOutcome cook_level(const Mesh& mesh, const BenchmarkConfig& cfg,
                        const ElasticityProblem& problem, const PrimalSolution& reference)
{
  LevelOutcome out;
  auto t0 = std::chrono::steady_clock::now();
  const PrimalSolution uh = solve_elasticity(mesh, cfg.k, problem);
  out.t_prime = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  EquilibrationOptions opt;
  opt.m = cfg.m;
  opt.primal_degree = cfg.k;
  opt.weak_symmetry = cfg.use_weak_symmetry();
  const EquilibratedField s = equilibrate(mesh, elasticity_flux_rows(uh, problem, cfg.m), opt);
  out.t_eqlb = seconds_since(t0);
  EstimatorConstants constants;
  constants.ck = cfg.ck;
  const ErrorEstimate e = cfg.estimator == EstimatorKind::Guaranteed
                              ? estimate_elasticity(uh, s, problem, constants)
                              : estimate_heuristic(uh, s, problem);
  out.n_dof = uh.num_dofs();
  out.err = elasticity_error(uh, reference, problem.lambda);
  out.eta = e.eta;
  out.eta_flux = e.eta_flux;
  out.eta_osc = e.eta_osc;
  out.eta_asym = e.eta_asym;
  out.indicators = e.indicators;
  return out;
}
} // namespace

int QuadrantSolution::quadrant(const Point& x)
{
  double theta = std::atan2(x.y(), x.x());
  if (theta < 0)
    theta += 2 * pi;
  return std::clamp(static_cast<int>(theta / (pi / 2)), 0, 3);
}

double QuadrantSolution::value(const Point& x) const
{
  const double r = x.norm();
  if (r == 0)
    return 0;
  double theta = std::atan2(x.y(), x.x());
  if (theta < 0)
    theta += 2 * pi;
  const int q = quadrant(x);
  return std::pow(r, alpha) * (a[q] * std::cos(alpha * theta) + b[q] * std::sin(alpha * theta));
}

Point QuadrantSolution::gradient(const Point& x) const
{
  const double r = x.norm();
  if (r == 0)
    return Point(0, 0);
  double theta = std::atan2(x.y(), x.x());
  if (theta < 0)
    theta += 2 * pi;
  const int q = quadrant(x);
  const double c = std::cos(alpha * theta), s = std::sin(alpha * theta);
  const double mu = a[q] * c + b[q] * s;
  const double dmu = alpha * (-a[q] * s + b[q] * c);
  const double scale = std::pow(r, alpha - 1);
  const Point er(std::cos(theta), std::sin(theta)), et(-std::sin(theta), std::cos(theta));
  return scale * (alpha * mu * er + dmu * et);
}

QuadrantSolution quadrant_exact_solution(double kappa1)
{
  if (!(kappa1 > 0))
    throw ConfigurationError("kappa1 must be positive");
  const double step = 1e-3;
  double lo = 0, flo = 0, hi = 0;
  bool found = false;
  double prev = step, fprev = characteristic(step, kappa1);
  for (double alpha = 2 * step; alpha < 1 - 0.5 * step; alpha += step)
  {
    const double f = characteristic(alpha, kappa1);
    if ((fprev < 0) != (f < 0))
    {
      lo = prev;
      flo = fprev;
      hi = alpha;
      found = true;
      break;
    }
    prev = alpha;
    fprev = f;
  }
  if (!found)
    throw ConfigurationError("no singular exponent in (0,1) for kappa1 = " +
                             format_double(kappa1) + " (the coefficient pattern is not singular)");
  while (hi - lo > 1e-12)
  {
    const double mid = 0.5 * (lo + hi);
    const double f = characteristic(mid, kappa1);
    if ((f < 0) == (flo < 0))
    {
      lo = mid;
      flo = f;
    }
    else
      hi = mid;
  }

  QuadrantSolution sol;
  sol.kappa1 = kappa1;
  sol.alpha = 0.5 * (lo + hi);
  const Eigen::Matrix2d M = transfer(sol.alpha, kappa1) - Eigen::Matrix2d::Identity();
  const int row = M.row(0).norm() >= M.row(1).norm() ? 0 : 1;
  Eigen::Vector2d v(-M(row, 1), M(row, 0));
  v.normalize();
  if (v[0] < 0)
    v = -v;
  for (int q = 0; q < 4; ++q)
  {
    const double theta = q * pi / 2;
    const double c = std::cos(sol.alpha * theta), s = std::sin(sol.alpha * theta);
    const double w = v[1] / (sol.alpha * sol.kappa(q));
    sol.a[q] = v[0] * c - w * s;
    sol.b[q] = v[0] * s + w * c;
    v = propagator(sol.alpha, sol.kappa(q)) * v;
  }
  return sol;
}

PoissonProblem quadrant_problem(const QuadrantSolution& solution)
{
  PoissonProblem p;
  p.kappa = [solution](const Point& x) { return solution.kappa(QuadrantSolution::quadrant(x)); };
  p.dirichlet = [solution](const Point& x) { return solution.value(x); };
  return p;
}

Mesh quadrant_mesh(int n)
{
  if (n < 2 || n % 2 != 0)
    throw ConfigurationError("the quadrant mesh needs an even number of cells per side");
  return create_rectangle(Point(-1, -1), Point(1, 1), n, n,
                          [](const Point&, const Point&) { return FacetTag::Dirichlet; });
}

std::array<Point, 4> cook_corners()
{
  return {Point(0, 0), Point(48, 44), Point(48, 60), Point(0, 44)};
}

ElasticityProblem cook_problem()
{
  ElasticityProblem p;
  p.lambda = cook_lambda;
  p.traction = [](const Point& x) {
    return x.x() > 48 - 1e-9 ? Point(0, cook_traction) : Point(0, 0);
  };
  return p;
}

Mesh cook_mesh(int n)
{
  const Mesh mesh = create_quadrilateral(cook_corners(), n, [](const Point& a, const Point& b) {
    return (std::abs(a.x()) < 1e-9 && std::abs(b.x()) < 1e-9) ? FacetTag::Dirichlet
                                                              : FacetTag::Neumann;
  });
  return enforce_patch_condition(split_corners(mesh));
}

bool BenchmarkConfig::use_weak_symmetry() const
{
  if (weak_symmetry)
    return *weak_symmetry;
  return problem == "cook" && estimator == EstimatorKind::Guaranteed;
}

void BenchmarkConfig::validate() const
{
  if (problem != "poisson-quadrants" && problem != "cook")
    throw ConfigurationError("config key 'problem': unknown problem '" + problem + "'");
  if (k < 1 || k > 4)
    throw ConfigurationError("config key 'k': primal degree must lie in 1..4");
  if (m < k || m > 5)
    throw ConfigurationError("config key 'm': flux degree must satisfy k <= m <= 5");
  if (!(theta > 0 && theta <= 1))
    throw ConfigurationError("config key 'theta': must lie in (0, 1]");
  if (max_levels < 1)
    throw ConfigurationError("config key 'max_levels': must be at least 1");
  if (!(ck > 0))
    throw ConfigurationError("config key 'ck': must be positive");
  if (workers < 0)
    throw ConfigurationError("config key 'workers': must not be negative");
  if (problem == "poisson-quadrants")
  {
    if (estimator == EstimatorKind::Heuristic)
      throw ConfigurationError("config key 'estimator': the heuristic indicator is only "
                               "defined for elasticity");
    if (use_weak_symmetry())
      throw ConfigurationError("config key 'weak_symmetry': only applies to elasticity");
    if (!(kappa1 > 0))
      throw ConfigurationError("config key 'kappa1': must be positive");
  }
  if (use_weak_symmetry() && k < 2)
    throw ConfigurationError("config key 'weak_symmetry': requires k >= 2 and m >= 2");
}

void apply_config_value(BenchmarkConfig& c, const std::string& key, const std::string& value)
{
  if (key == "problem")
    c.problem = value;
  else if (key == "kappa1")
    c.kappa1 = parse_number(key, value);
  else if (key == "k")
    c.k = parse_int(key, value);
  else if (key == "m")
    c.m = parse_int(key, value);
  else if (key == "theta")
    c.theta = parse_number(key, value);
  else if (key == "estimator")
  {
    if (value == "guaranteed")
      c.estimator = EstimatorKind::Guaranteed;
    else if (value == "heuristic")
      c.estimator = EstimatorKind::Heuristic;
    else
      throw ConfigurationError("config key 'estimator': expected guaranteed or heuristic, got '" +
                               value + "'");
  }
  else if (key == "weak_symmetry")
    c.weak_symmetry = parse_bool(key, value);
  else if (key == "max_levels")
    c.max_levels = parse_int(key, value);
  else if (key == "err_tol")
    c.err_tol = parse_number(key, value);
  else if (key == "ck")
    c.ck = parse_number(key, value);
  else if (key == "output_dir")
    c.output_dir = value;
  else if (key == "vtk")
    c.vtk = parse_bool(key, value);
  else if (key == "workers")
    c.workers = parse_int(key, value);
  else
    throw ConfigurationError("unknown config key '" + key + "'");
}

BenchmarkConfig parse_config(std::istream& in)
{
  BenchmarkConfig c;
  std::string line;
  int number = 0;
  while (std::getline(in, line))
  {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("config line " + std::to_string(number) + ": expected key = value");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    apply_config_value(c, trim(line.substr(0, eq)), value);
  }
  c.validate();
  return c;
}

BenchmarkConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigurationError("cannot open config file '" + path + "'");
  return parse_config(in);
}

const PrimalSolution& cook_reference()
{
  static std::once_flag once;
  static std::unique_ptr<CookReference> ref;
  std::call_once(once, [] { ref = compute_cook_reference(); });
  return ref->solution;
}

RunRecord run_benchmark(const BenchmarkConfig& config)
{
  config.validate();
  if (config.workers > 0)
    omp_set_num_threads(config.workers);

  RunRecord record;
  record.config = config;
  Metadata& meta = record.metadata;
  meta.emplace_back("problem", config.problem);

  AdaptiveOptions options;
  options.theta = config.theta;
  options.max_levels = config.max_levels;
  options.err_tol = config.err_tol;

  std::filesystem::path dir;
  if (!config.output_dir.empty())
  {
    dir = config.output_dir;
    std::filesystem::create_directories(dir);
  }
  auto write_mesh = [&](const Mesh& mesh, const LevelRecord& row, const LevelOutcome& out,
                        const std::function<double(const Point&)>& kappa) {
    if (dir.empty() || !config.vtk)
      return;
    CellData data;
    data.emplace_back("eta", out.indicators.cwiseSqrt());
    if (kappa)
    {
      Eigen::VectorXd kv(mesh.num_cells());
      for (Index c = 0; c < mesh.num_cells(); ++c)
        kv[c] = kappa(mesh.affine_map(c).push_forward(Point(1.0 / 3, 1.0 / 3)));
      data.emplace_back("kappa", kv);
    }
    std::ofstream vtk(dir / ("mesh_" + std::to_string(row.level) + ".vtk"));
    write_vtk(vtk, mesh, data);
  };

  AdaptiveResult result;
  if (config.problem == "poisson-quadrants")
  {
    const QuadrantSolution exact = quadrant_exact_solution(config.kappa1);
    const PoissonProblem problem = quadrant_problem(exact);
    meta.emplace_back("kappa1", format_double(config.kappa1));
    meta.emplace_back("kappa2", "1");
    meta.emplace_back("alpha", format_double(exact.alpha));
    meta.emplace_back("domain", "(-1,1)^2, kappa1 in the quadrants x>0,y>0 and x<0,y<0");
    const Mesh initial = quadrant_mesh();
    options.diameter_floor = 1e-12 * initial.domain_diameter();
    result = adaptive_loop(
        initial,
        [&](const Mesh& mesh, int) { return poisson_level(mesh, config, exact, problem); },
        options,
        [&](const Mesh& mesh, const LevelRecord& row, const LevelOutcome& out) {
          write_mesh(mesh, row, out, problem.kappa);
        });
  }
  else
  {
    const ElasticityProblem problem = cook_problem();
    meta.emplace_back("lambda", format_double(cook_lambda));
    meta.emplace_back("traction", format_double(cook_traction));
    meta.emplace_back("corners", "(0,0) (48,44) (48,60) (0,44)");
    meta.emplace_back("reference", "k=3 adaptive to " + std::to_string(cook_reference_dofs) +
                                       " dofs, two uniform bisections, k=4");
    const PrimalSolution& reference = cook_reference();
    const Mesh initial = cook_mesh();
    options.diameter_floor = 1e-12 * initial.domain_diameter();
    options.patch_condition = true;
    result = adaptive_loop(
        initial,
        [&](const Mesh& mesh, int) { return cook_level(mesh, config, problem, reference); },
        options,
        [&](const Mesh& mesh, const LevelRecord& row, const LevelOutcome& out) {
          write_mesh(mesh, row, out, nullptr);
        });
  }
  meta.emplace_back("k", std::to_string(config.k));
  meta.emplace_back("m", std::to_string(config.m));
  meta.emplace_back("theta", format_double(config.theta));
  meta.emplace_back("estimator", estimator_name(config.estimator));
  meta.emplace_back("weak_symmetry", config.use_weak_symmetry() ? "true" : "false");
  meta.emplace_back("ck", format_double(config.ck));
  meta.emplace_back("max_levels", std::to_string(config.max_levels));
  meta.emplace_back("err_tol", format_double(config.err_tol));
  meta.emplace_back("eoc", "-(log err_l - log err_{l-1}) / (log n_dof_l - log n_dof_{l-1})");
  meta.emplace_back("workers", std::to_string(omp_get_max_threads()));

  record.history = std::move(result.history);
  record.final_mesh = std::move(result.final_mesh);
  if (!dir.empty())
  {
    std::ofstream csv(dir / "results.csv");
    write_results_csv(csv, record.metadata, record.history);
    if (!csv)
      throw std::runtime_error("cannot write " + (dir / "results.csv").string());
  }
  return record;
}

std::vector<TimingRow> timing_study(const std::string& problem, int k, int m,
                                    const std::vector<int>& sizes, EstimatorKind estimator,
                                    int repeats)
{
  if (sizes.size() < 2)
    throw ConfigurationError("the timing study needs at least two mesh sizes");
  if (m < k)
    throw ConfigurationError("flux degree m must be at least the primal degree k");
  std::vector<TimingRow> rows;
  for (int n : sizes)
  {
    TimingRow row;
    row.size = n;
    row.t_prime = row.t_eqlb = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < std::max(repeats, 1); ++rep)
    {
      if (problem == "cook")
      {
        const Mesh mesh = cook_mesh(n);
        const ElasticityProblem p = cook_problem();
        auto t0 = std::chrono::steady_clock::now();
        const PrimalSolution uh = solve_elasticity(mesh, k, p);
        row.t_prime = std::min(row.t_prime, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        EquilibrationOptions opt;
        opt.m = m;
        opt.primal_degree = k;
        opt.weak_symmetry = estimator == EstimatorKind::Guaranteed;
        equilibrate(mesh, elasticity_flux_rows(uh, p, m), opt);
        row.t_eqlb = std::min(row.t_eqlb, seconds_since(t0));
        row.n_dof = uh.num_dofs();
      }
      else if (problem == "poisson-quadrants")
      {
        const Mesh mesh = quadrant_mesh(n);
        const PoissonProblem p = quadrant_problem(quadrant_exact_solution(5));
        auto t0 = std::chrono::steady_clock::now();
        const PrimalSolution uh = solve_poisson(mesh, k, p);
        row.t_prime = std::min(row.t_prime, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        EquilibrationOptions opt;
        opt.m = m;
        opt.primal_degree = k;
        opt.cell_weight = inverse_kappa(mesh, p);
        equilibrate(mesh, poisson_flux_rows(uh, p, m), opt);
        row.t_eqlb = std::min(row.t_eqlb, seconds_since(t0));
        row.n_dof = uh.num_dofs();
      }
      else
        throw ConfigurationError("unknown problem '" + problem + "'");
    }
    row.t_tot = row.t_prime + row.t_eqlb;
    row.ratio = row.t_eqlb / row.t_tot;
    rows.push_back(row);
  }
  return rows;
}

} // namespace equilibra
