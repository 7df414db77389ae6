#pragma once

#include "equilibration.hpp"
#include "primal.hpp"

#include <functional>
#include <optional>

namespace equilibra
{

/// C_P,T = h_T / pi on every cell; C_K weights the asymmetry and residual
/// terms of the elasticity estimator.
struct EstimatorConstants
{
  double ck = 1.0;

  static double poincare(double h) { return h / 3.14159265358979323846; }
};

/// Per-cell terms and totals of an error estimate.
///
/// Poisson: eta_T = flux_T + osc_T. Elasticity: eta_T^2 = flux_T^2 +
/// C_K (asym_T + osc_T)^2 with flux_T the A-norm term. Heuristic: eta_T =
/// flux_T, the A-norm term alone. The totals are eta = sqrt(sum eta_T^2), eta_flux and
/// eta_osc the l2 sums of the respective terms, and eta_asym the square root
/// of the C_K weighted sum (zero for Poisson and the heuristic indicator).
struct ErrorEstimate
{
  Eigen::VectorXd flux, osc, asym;
  Eigen::VectorXd indicators; // eta_T^2
  double eta = 0, eta_flux = 0, eta_osc = 0, eta_asym = 0;
};

ErrorEstimate estimate_poisson(const PrimalSolution& uh, const DiscreteFunction& sigma,
                               const PoissonProblem& problem,
                               const EstimatorConstants& constants = {});

ErrorEstimate estimate_elasticity(const PrimalSolution& uh, const EquilibratedField& sigma,
                                  const ElasticityProblem& problem,
                                  const EstimatorConstants& constants = {});

ErrorEstimate estimate_heuristic(const PrimalSolution& uh, const EquilibratedField& sigma,
                                 const ElasticityProblem& problem);

/// ||kappa^{1/2} grad(u - u_h)|| for a known gradient of u. Cells with a
/// vertex at `singular_point` are integrated with a graded composite rule.
double poisson_error(const PrimalSolution& uh, const PoissonProblem& problem,
                     const std::function<Point(const Point&)>& exact_gradient,
                     std::optional<Point> singular_point = std::nullopt);

/// |||u - u_h|||^2 = ||eps||^2 + lambda ||div||^2 against a reference
/// solution on a mesh that shares its lineage roots with the mesh of u_h
/// (both obtained by bisection from the same initial mesh).
double elasticity_error(const PrimalSolution& uh, const PrimalSolution& reference, double lambda);

} // namespace equilibra
