#pragma once

#include "function_space.hpp"
#include "patch_solvers.hpp"
#include "primal.hpp"

#include <memory>
#include <vector>

namespace equilibra
{

/// One flux to equilibrate: its discontinuous approximation sigma_h
/// (two components of degree m-1), the prescribed divergence g and the
/// prescribed normal trace on the Neumann boundary.
struct FluxRow
{
  DiscreteFunction flux_x, flux_y;
  DiscreteFunction rhs;
  ScalarField neumann; // empty means 0
};

struct EquilibrationOptions
{
  int m = 1;
  int primal_degree = 0; // checked against m when positive
  bool weak_symmetry = false;
  Eigen::VectorXd cell_weight; // per cell weight of the patch minimisation, empty means 1
  Execution execution = Execution::Parallel;
};

/// Equilibrated fluxes in the global Raviart-Thomas space, one per row.
struct EquilibratedField
{
  std::shared_ptr<const FunctionSpace> space;
  std::vector<DiscreteFunction> rows;
};

/// Sum of the patch contributions over all vertices. With weak symmetry the
/// two rows are corrected so that the asymmetric part of the stress is
/// orthogonal to continuous P1 functions.
EquilibratedField equilibrate(const Mesh& mesh, const std::vector<FluxRow>& rows,
                              const EquilibrationOptions& options);

/// Degree of the right-hand side projection used for flux degree m.
inline int rhs_degree(int m) { return std::max(m - 1, 1); }

/// Rows for the Poisson problem: -kappa grad u_h projected to degree m-1
/// and f projected to degree rhs_degree(m).
std::vector<FluxRow> poisson_flux_rows(const PrimalSolution& uh, const PoissonProblem& problem,
                                       int m);

/// Cellwise 1/kappa, the weight that matches the minimisation to the
/// kappa^{-1/2} scaled flux estimator.
Eigen::VectorXd inverse_kappa(const Mesh& mesh, const PoissonProblem& problem);

/// Rows of the stress for linear elasticity with divergence -f_i and
/// Neumann traces t_i.
std::vector<FluxRow> elasticity_flux_rows(const PrimalSolution& uh,
                                          const ElasticityProblem& problem, int m);

} // namespace equilibra
