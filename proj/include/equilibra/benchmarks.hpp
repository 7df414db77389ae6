#pragma once

#include "adaptivity.hpp"
#include "io.hpp"
#include "primal.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace equilibra
{

/// u = r^alpha mu_i(theta) on (-1,1)^2 with mu_i(theta) = a_i cos(alpha theta)
/// + b_i sin(alpha theta) in quadrant i (counter-clockwise from the positive
/// quadrant, theta in [0, 2 pi)). kappa is kappa1 in quadrants 0 and 2 and 1
/// in quadrants 1 and 3.
struct QuadrantSolution
{
  double kappa1 = 1;
  double alpha = 0;
  std::array<double, 4> a{}, b{};

  static int quadrant(const Point& x);
  double kappa(int quadrant) const { return quadrant % 2 == 0 ? kappa1 : 1.0; }
  double value(const Point& x) const;
  Point gradient(const Point& x) const;
};

/// Smallest alpha in (0,1) for which the four interface conditions admit a
/// nontrivial solution, located by scanning and bisecting det(T - I) of the
/// transfer matrix T. Throws ConfigurationError if there is none.
QuadrantSolution quadrant_exact_solution(double kappa1);

PoissonProblem quadrant_problem(const QuadrantSolution& solution);
Mesh quadrant_mesh(int n = 4);

inline constexpr double cook_lambda = 2.333;
inline constexpr double cook_traction = 0.03;
std::array<Point, 4> cook_corners();
ElasticityProblem cook_problem();

/// Cook's membrane on an n by n quadrilateral grid, clamped at x = 0, with
/// corner cells split so that every vertex patch has two interior facets.
Mesh cook_mesh(int n = 4);

enum class EstimatorKind
{
  Guaranteed,
  Heuristic,
};

struct BenchmarkConfig
{
  std::string problem = "poisson-quadrants";
  double kappa1 = 5;
  int k = 1;
  int m = 1;
  double theta = 0.5;
  EstimatorKind estimator = EstimatorKind::Guaranteed;
  std::optional<bool> weak_symmetry; // defaults to true for guaranteed Cook runs
  int max_levels = 20;
  double err_tol = 0;
  double ck = 1;
  std::string output_dir;
  bool vtk = false;
  int workers = 0; // 0 keeps the OpenMP default

  bool use_weak_symmetry() const;
  void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys and bad
/// values raise ConfigurationError naming the key.
BenchmarkConfig parse_config(std::istream& in);
BenchmarkConfig load_config(const std::string& path);
void apply_config_value(BenchmarkConfig& config, const std::string& key, const std::string& value);

struct RunRecord
{
  BenchmarkConfig config;
  Metadata metadata;
  std::vector<LevelRecord> history;
  Mesh final_mesh;
};

/// Reference displacement for Cook's membrane: a k = 3 adaptive run driven
/// by the heuristic indicator, refined uniformly once more and solved with
/// k = 4. Cached per process.
const PrimalSolution& cook_reference();

/// Runs the adaptive loop. Writes results.csv (and mesh_<level>.vtk when
/// requested) into config.output_dir unless it is empty.
RunRecord run_benchmark(const BenchmarkConfig& config);

struct TimingRow
{
  int size = 0;
  Index n_dof = 0;
  double t_prime = 0, t_eqlb = 0, t_tot = 0, ratio = 0;
};

/// t_eqlb / t_tot on fixed meshes of the given grid sizes. For Cook the
/// guaranteed setting imposes weak symmetry, the heuristic one does not.
std::vector<TimingRow> timing_study(const std::string& problem, int k, int m,
                                    const std::vector<int>& sizes,
                                    EstimatorKind estimator = EstimatorKind::Guaranteed,
                                    int repeats = 1);

} // namespace equilibra
