#pragma once

#include "common.hpp"

#include <span>
#include <vector>

namespace equilibra
{

enum class ElementFamily
{
  Lagrange,
  DiscLagrange,
  RaviartThomas,
};

/// Basis values and first derivatives at a set of reference points.
///
/// Scalar families store gradients, the Raviart-Thomas family stores the
/// divergence. Layout is point-major: (point, basis, component).
struct Tabulation
{
  int num_points = 0;
  int num_basis = 0;
  int value_size = 1;
  std::vector<double> values;
  std::vector<double> derivatives;

  double value(int p, int i, int c = 0) const
  {
    return values[(p * num_basis + i) * value_size + c];
  }
  double grad(int p, int i, int d) const { return derivatives[(p * num_basis + i) * 2 + d]; }
  double div(int p, int i) const { return derivatives[p * num_basis + i]; }
};

/// Finite element on the reference triangle (0,0), (1,0), (0,1).
///
/// Local facet f is opposite local vertex f and is traversed from its lower
/// to its higher local vertex. The basis is the dual of the DOF functionals,
/// which are represented as an interpolation matrix acting on point values.
///
/// Raviart-Thomas elements of degree m (normal traces in P_{m-1}, dimension
/// m(m+2)) use hierarchic functionals:
///   - facet f, j = 0..m-1: integral of v.n against the orthonormal Legendre
///     polynomial L_j on f,
///   - interior, divergence carrying: integral of div v against the
///     non-constant orthonormal polynomials of P_{m-1},
///   - interior, divergence free: integral of v against curl(b_T r),
///     r a monomial of degree <= m-3 and b_T the cubic bubble.
/// The dual functions of the last group are divergence free with vanishing
/// normal trace; facet functions with j >= 1 are divergence free; the
/// divergence of interior function i is the i-th orthonormal polynomial.
class ReferenceElement
{
public:
  static ReferenceElement lagrange(int degree);
  static ReferenceElement disc_lagrange(int degree);
  static ReferenceElement raviart_thomas(int degree);

  ElementFamily family() const { return family_; }
  int degree() const { return degree_; }
  int num_dofs() const { return num_dofs_; }
  int value_size() const { return value_size_; }

  Tabulation tabulate(std::span<const Point> points) const;

  /// DOFs attached to a vertex (Lagrange only; empty otherwise).
  std::span<const int> vertex_dofs(int v) const { return vertex_dofs_[v]; }

  /// DOFs attached to the interior of facet f, ordered along the local
  /// facet direction (Lagrange) or by moment index (Raviart-Thomas).
  std::span<const int> facet_dofs(int f) const { return facet_dofs_[f]; }

  std::span<const int> interior_dofs() const { return interior_dofs_; }

  /// Raviart-Thomas interior DOFs whose basis functions carry divergence.
  std::span<const int> divergence_dofs() const { return divergence_dofs_; }

  /// Raviart-Thomas interior DOFs whose basis functions are divergence free
  /// with zero normal trace.
  std::span<const int> divfree_interior_dofs() const { return divfree_dofs_; }

  /// DOF functionals: dofs = interpolation_matrix * values, values laid
  /// out as (point, component).
  const std::vector<Point>& interpolation_points() const { return ipoints_; }
  const Eigen::MatrixXd& interpolation_matrix() const { return imatrix_; }

private:
  ReferenceElement() = default;

  void build_lagrange_layout();
  void build_dual_basis();

  // Prime basis: monomials (scalar) or the RT polynomial set (vector)
  void tabulate_prime(std::span<const Point> points, Eigen::MatrixXd& values,
                      Eigen::MatrixXd& derivatives) const;

  ElementFamily family_ = ElementFamily::Lagrange;
  int degree_ = 1;
  int num_dofs_ = 0;
  int value_size_ = 1;

  std::vector<int> vertex_dofs_[3];
  std::vector<int> facet_dofs_[3];
  std::vector<int> interior_dofs_;
  std::vector<int> divergence_dofs_;
  std::vector<int> divfree_dofs_;

  std::vector<Point> ipoints_;
  Eigen::MatrixXd imatrix_;

  // basis_i = sum_p coeffs_(p, i) prime_p
  Eigen::MatrixXd coeffs_;
};

/// Reference facet geometry (f opposite vertex f).
struct ReferenceFacet
{
  Point start, end, normal;
  double length;
};
const ReferenceFacet& reference_facet(int f);

/// Equispaced lattice points of degree k on the reference triangle in
/// Lagrange DOF order (vertices, facet interiors, cell interior).
std::vector<Point> lagrange_nodes(int degree);

} // namespace equilibra
