#include "equilibra/adaptivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace equilibra
{

std::vector<Index> mark_doerfler(const Eigen::VectorXd& indicators, double theta)
{
  if (!(theta > 0 && theta <= 1))
    throw ConfigurationError("Doerfler parameter theta must lie in (0, 1], got " +
                             std::to_string(theta));
  double total = 0;
  for (double v : indicators)
  {
    if (!(v >= 0) || !std::isfinite(v))
      throw ConfigurationError("refinement indicators must be finite and non-negative");
    total += v;
  }
  if (total == 0)
    throw ConfigurationError("all refinement indicators vanish");

  std::vector<Index> order(static_cast<std::size_t>(indicators.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return indicators[a] > indicators[b]; });
  const double target = theta * total;
  std::vector<Index> marked;
  double sum = 0;
  for (Index c : order)
  {
    if (sum >= target || indicators[c] == 0)
      break;
    marked.push_back(c);
    sum += indicators[c];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

Mesh refine_generations(const Mesh& mesh, std::span<const Index> marked, int generations)
{
  if (generations < 1)
    throw ConfigurationError("at least one bisection generation is needed");
  Mesh current = mesh;
  std::vector<char> active(static_cast<std::size_t>(mesh.num_cells()), 0);
  for (Index c : marked)
    active[static_cast<std::size_t>(c)] = 1;
  for (int g = 0; g < generations; ++g)
  {
    std::vector<Index> cells;
    for (Index c = 0; c < current.num_cells(); ++c)
      if (active[static_cast<std::size_t>(c)])
        cells.push_back(c);
    std::vector<Index> parent;
    Mesh next = refine(current, cells, &parent);
    std::vector<char> next_active(static_cast<std::size_t>(next.num_cells()), 0);
    for (Index c = 0; c < next.num_cells(); ++c)
      next_active[static_cast<std::size_t>(c)] = active[static_cast<std::size_t>(parent[c])];
    current = std::move(next);
    active = std::move(next_active);
  }
  return current;
}

double experimental_order(Index n0, double e0, Index n1, double e1)
{
  return -(std::log(e1) - std::log(e0)) / (std::log(double(n1)) - std::log(double(n0)));
}

AdaptiveResult adaptive_loop(const Mesh& initial, const LevelSolver& solve,
                             const AdaptiveOptions& options,
                             const std::function<void(const Mesh&, const LevelRecord&,
                                                      const LevelOutcome&)>& on_level)
{
  if (!(options.theta > 0 && options.theta <= 1))
    throw ConfigurationError("Doerfler parameter theta must lie in (0, 1]");
  if (options.generations < 1)
    throw ConfigurationError("at least one bisection generation is needed");
  if (options.max_levels < 1)
    throw ConfigurationError("max_levels must be at least 1");

  AdaptiveResult result;
  Mesh mesh = initial;
  for (int level = 0;; ++level)
  {
    const LevelOutcome out = solve(mesh, level);
    LevelRecord row;
    row.level = level;
    row.n_cells = mesh.num_cells();
    row.n_dof = out.n_dof;
    row.err = out.err;
    row.eta = out.eta;
    row.eta_flux = out.eta_flux;
    row.eta_osc = out.eta_osc;
    row.eta_asym = out.eta_asym;
    row.i_eff = out.eta / out.err;
    row.eoc = result.history.empty()
                  ? std::numeric_limits<double>::quiet_NaN()
                  : experimental_order(result.history.back().n_dof, result.history.back().err,
                                       out.n_dof, out.err);
    row.t_prime = out.t_prime;
    row.t_eqlb = out.t_eqlb;
    row.t_tot = out.t_prime + out.t_eqlb;
    result.history.push_back(row);
    if (on_level)
      on_level(mesh, row, out);

    const bool done = level + 1 >= options.max_levels ||
                      (options.err_tol > 0 && out.err <= options.err_tol) ||
                      mesh.min_diameter() < options.diameter_floor || out.indicators.sum() == 0;
    if (done)
      break;
    mesh = refine_generations(mesh, mark_doerfler(out.indicators, options.theta), options.generations);
    if (options.patch_condition)
      mesh = enforce_patch_condition(mesh);
  }
  result.final_mesh = std::move(mesh);
  return result;
}

} // namespace equilibra
