#pragma once

#include "elements.hpp"
#include "function_space.hpp"
#include "mesh.hpp"
#include "polynomials.hpp"
#include "quadrature.hpp"

#include <array>
#include <vector>

namespace equilibra
{

/// Reference data shared by all patches for flux degree m.
struct EquilibrationContext
{
  explicit EquilibrationContext(int m);

  int m;
  ReferenceElement rt;
  TriangleRule rule;
  Tabulation rt_tab;
  Eigen::MatrixXd q_values;           // orthonormal P_{m-1} at rule points (nq x nq_basis)
  Eigen::MatrixXd bary;               // barycentric coordinates at rule points (nq x 3)
  std::array<Eigen::MatrixXd, 4> K;   // K[2a+b](i,j) = int psi_i,a psi_j,b on the reference cell
  LineRule line;                      // for Neumann moments
  Eigen::MatrixXd extend;             // P_{m-1} values at rule points -> values at rt interpolation points
  Eigen::MatrixXd interp_bary;        // barycentric coordinates at rt interpolation points

  int dofs_per_cell() const { return rt.num_dofs(); }
  int num_points() const { return static_cast<int>(rule.size()); }

  /// Raviart-Thomas mass matrix on a cell.
  Eigen::MatrixXd mass(const AffineMap& map) const;
};

/// Data of one flux row restricted to a patch, at the context rule points.
struct PatchRowData
{
  std::vector<Eigen::MatrixXd> flux;    // per patch cell: nq x 2 values of sigma_h
  std::vector<Eigen::VectorXd> rhs;     // per patch cell: nq values of g (div sigma = g)
  std::vector<Eigen::VectorXd> neumann; // per patch facet: m global moments (Neumann facets)
};

/// Patch geometry, the divergence-free correction space and its Gram
/// matrix. Coefficient vectors on the patch are local per cell, stacked
/// cell by cell (num_cells * dofs_per_cell).
struct PatchSystem
{
  Patch patch;
  std::vector<AffineMap> maps;
  std::vector<FacetTag> tags;         // per patch facet
  std::vector<std::vector<double>> signs;
  std::vector<std::vector<Index>> dofs;
  std::vector<std::array<Index, 3>> cell_vertices;
  std::vector<Index> vertices;        // z first, then the other patch vertices
  std::vector<Eigen::MatrixXd> mass;
  Eigen::MatrixXd basis;              // stacked local coefficients, one column per function
  Eigen::MatrixXd A;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool touches_dirichlet = false;
  bool touches_neumann = false;

  int num_cells() const { return patch.num_cells(); }
  Index size() const { return static_cast<Index>(basis.rows()); }

  /// Local facet of cell i that is its incoming / outgoing patch facet.
  int incoming_local(int i) const { return (patch.local_vertex[i] + 2) % 3; }
  int outgoing_local(int i) const { return (patch.local_vertex[i] + 1) % 3; }
};

/// `cell_weight` (indexed by mesh cell, empty means 1) weights the L2 norm
/// that the patch minimisation measures on each cell.
PatchSystem make_patch_system(const EquilibrationContext& ctx, const FunctionSpace& rt_space,
                              Index z, const Eigen::VectorXd& cell_weight = {});

/// Global Neumann moments of phi_z t on facet f for the patch of z.
Eigen::VectorXd neumann_moments(const EquilibrationContext& ctx, const Mesh& mesh, Index f, Index z,
                                const std::function<double(const Point&)>& t);

struct PatchContribution
{
  Eigen::VectorXd explicit_part; // Delta sigma tilde
  Eigen::VectorXd correction;    // Delta sigma, in V^Delta
  Eigen::VectorXd coefficients;  // coefficients of the correction in the basis

  Eigen::VectorXd total() const { return explicit_part + correction; }
};

/// Explicit step: a patch function satisfying the divergence and Neumann
/// constraints. Throws std::logic_error if the data is incompatible.
Eigen::VectorXd explicit_step(const EquilibrationContext& ctx, const PatchSystem& sys,
                              const PatchRowData& row);

/// Local coefficients of the Raviart-Thomas interpolant of phi_z sigma_h on
/// patch cell i, where sigma_h is a degree m-1 field given at rule points.
Eigen::VectorXd interpolate_hat_flux(const EquilibrationContext& ctx, const PatchSystem& sys,
                                     int i, const Eigen::MatrixXd& flux);

/// Load vector int (I(phi_z sigma_h) - v) . psi for the correction basis,
/// I being the cellwise Raviart-Thomas interpolant.
Eigen::VectorXd minimisation_load(const EquilibrationContext& ctx, const PatchSystem& sys,
                                  const PatchRowData& row, const Eigen::VectorXd& v);

/// Explicit step followed by the minimisation of ||v - I(phi_z sigma_h)||.
PatchContribution equilibrate_patch_semiexplicit(const EquilibrationContext& ctx,
                                                 const PatchSystem& sys, const PatchRowData& row);

/// Blocks of the weak symmetry constraint on a patch: rows of the
/// correction basis times the P1 hat functions of the patch vertices.
struct WeakSymmetrySystem
{
  Eigen::MatrixXd Gx, Gy;       // int psi_d,x gamma_y and int psi_d,y gamma_y per local dof d
  Eigen::MatrixXd B1, B2;       // basis functions x patch vertices
  Eigen::VectorXd C;            // integral of each hat, empty when no mean constraint
  Eigen::VectorXd Lc;           // int (s12 - s21) gamma_y of the current rows
};

WeakSymmetrySystem weak_symmetry_system(const EquilibrationContext& ctx, const PatchSystem& sys,
                                        const Eigen::VectorXd& row1, const Eigen::VectorXd& row2);

/// Integrals of (s12 - s21) against the patch hat functions.
Eigen::VectorXd weak_symmetry_residual(const WeakSymmetrySystem& ws, const Eigen::VectorXd& row1,
                                       const Eigen::VectorXd& row2);

struct SchurSolution
{
  Eigen::VectorXd u1, u2, c;
  double lambda = 0;
};

/// S = B1' A^-1 B1 + B2' A^-1 B2 from a factorisation of A.
Eigen::MatrixXd schur_complement(const Eigen::LLT<Eigen::MatrixXd>& A, const Eigen::MatrixXd& B1,
                                 const Eigen::MatrixXd& B2);

/// Solves [A 0 B1 0; 0 A B2 0; B1' B2' 0 C; 0 0 C' 0] (u1, u2, c, lambda)
/// = (0, 0, Lc, 0) through the Schur complement S = B1'A^-1 B1 + B2'A^-1 B2.
/// An empty C drops the last row and column. Throws SingularSystemError if
/// the bordered Schur matrix is singular.
SchurSolution solve_schur(const Eigen::LLT<Eigen::MatrixXd>& A, const Eigen::MatrixXd& B1,
                          const Eigen::MatrixXd& B2, const Eigen::VectorXd& C,
                          const Eigen::VectorXd& Lc);

/// Symmetry correction of two equilibrated rows on a patch (added in place).
SchurSolution impose_weak_symmetry_patch(const EquilibrationContext& ctx, const PatchSystem& sys,
                                         Eigen::VectorXd& row1, Eigen::VectorXd& row2);

} // namespace equilibra
