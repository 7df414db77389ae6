#pragma once

#include "mesh.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace equilibra
{

/// Smallest set of cells whose indicators (eta_T^2) sum to at least theta
/// times the total. Cells are taken by decreasing indicator, ties by
/// increasing cell id; the result is sorted by cell id.
std::vector<Index> mark_doerfler(const Eigen::VectorXd& indicators, double theta);

/// What a single SOLVE and ESTIMATE step reports back to the loop.
struct LevelOutcome
{
  Index n_dof = 0;
  double err = 0;
  double eta = 0, eta_flux = 0, eta_osc = 0, eta_asym = 0;
  double t_prime = 0, t_eqlb = 0;
  Eigen::VectorXd indicators; // eta_T^2 used for marking
};

/// One row of the convergence history.
struct LevelRecord
{
  int level = 0;
  Index n_cells = 0;
  Index n_dof = 0;
  double err = 0, eta = 0, eta_flux = 0, eta_osc = 0, eta_asym = 0;
  double i_eff = 0;
  double eoc = 0; // NaN on the first level
  double t_prime = 0, t_eqlb = 0, t_tot = 0;
};

using LevelSolver = std::function<LevelOutcome(const Mesh& mesh, int level)>;

struct AdaptiveOptions
{
  double theta = 0.5;
  int max_levels = 20;
  double err_tol = 0;        // stop once err <= err_tol (ignored when <= 0)
  double diameter_floor = 0; // stop once the smallest cell is below this
  int generations = 2;       // bisection generations applied to each marked cell
  bool patch_condition = false; // keep two interior facets at every boundary vertex
};

/// Newest vertex bisection repeated `generations` times on the descendants
/// of the marked cells, so that two generations quarter every marked cell.
Mesh refine_generations(const Mesh& mesh, std::span<const Index> marked, int generations);

struct AdaptiveResult
{
  std::vector<LevelRecord> history;
  Mesh final_mesh;
};

/// -(log e1 - log e0) / (log n1 - log n0)
double experimental_order(Index n0, double e0, Index n1, double e1);

/// SOLVE, ESTIMATE, MARK, REFINE until a stop rule fires. `on_level` sees
/// every mesh together with its history row before it is refined.
AdaptiveResult adaptive_loop(const Mesh& initial, const LevelSolver& solve,
                             const AdaptiveOptions& options,
                             const std::function<void(const Mesh&, const LevelRecord&,
                                                      const LevelOutcome&)>& on_level = {});

} // namespace equilibra
