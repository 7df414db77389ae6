#pragma once

#include "function_space.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

namespace equilibra
{

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;

/// div(-kappa grad u) = f, u = g on the Dirichlet boundary, zero flux on
/// the Neumann boundary. kappa is evaluated once per cell (at the centroid).
struct PoissonProblem
{
  ScalarField kappa;     // empty means 1
  ScalarField source;    // empty means 0
  ScalarField dirichlet; // empty means 0
};

/// -div sigma(u) = f with sigma(u) = 2 eps(u) + lambda div(u) I,
/// sigma(u) n = t on the Neumann boundary, u = g on the Dirichlet boundary.
struct ElasticityProblem
{
  double lambda = 1.0;
  VectorField body_force; // empty means 0
  VectorField traction;   // empty means 0
  VectorField dirichlet;  // empty means 0
};

/// Assembled linear system with Dirichlet constraints (not yet applied).
struct SparseSystem
{
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<Index> constrained;
  std::vector<double> values;
};

/// Lagrange solution with one coefficient vector per component.
struct PrimalSolution
{
  std::shared_ptr<const FunctionSpace> space;
  std::vector<DiscreteFunction> u;
  double relative_residual = 0;
  int quadrature_degree = 0; // cell rule used for the load vector

  Index num_dofs() const
  {
    return static_cast<Index>(u.size()) * space->num_dofs();
  }
};

SparseSystem assemble_poisson(const FunctionSpace& V, const PoissonProblem& problem,
                              int quadrature_degree);
SparseSystem assemble_elasticity(const FunctionSpace& V, const ElasticityProblem& problem,
                                 int quadrature_degree);

/// Symmetric elimination of the constraints followed by a sparse Cholesky
/// solve. Throws SingularSystemError if nothing is constrained or the
/// factorisation fails. `residual` receives the relative residual of the
/// reduced system.
Eigen::VectorXd solve_constrained(const SparseSystem& system, double* residual = nullptr);

PrimalSolution solve_poisson(const Mesh& mesh, int k, const PoissonProblem& problem,
                             int quadrature_degree = -1);
PrimalSolution solve_elasticity(const Mesh& mesh, int k, const ElasticityProblem& problem,
                                int quadrature_degree = -1);

/// Cell-wise flux -kappa grad u_h, two components.
CellEvaluator poisson_flux(const PrimalSolution& uh, const PoissonProblem& problem);

/// Cell-wise stress of u_h, four components (s11, s12, s21, s22).
CellEvaluator elasticity_stress(const PrimalSolution& uh, double lambda);

/// kappa on cell c (evaluated at the centroid).
double cell_kappa(const Mesh& mesh, Index c, const PoissonProblem& problem);

} // namespace equilibra
