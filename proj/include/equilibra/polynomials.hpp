#pragma once

#include "common.hpp"

#include <span>
#include <utility>
#include <vector>

namespace equilibra::poly
{

/// Exponents (a, b) of x^a y^b for all monomials of total degree <= degree,
/// ordered by total degree, then by b.
std::vector<std::pair<int, int>> monomial_exponents(int degree);

/// Number of monomials of total degree <= degree.
inline int dimension(int degree) { return (degree + 1) * (degree + 2) / 2; }

/// Values (npts x nmono) and x/y derivatives of all monomials up to degree.
struct MonomialTable
{
  Eigen::MatrixXd values, dx, dy;
};
MonomialTable tabulate_monomials(std::span<const Point> points, int degree);

/// Legendre polynomial of degree j on [0,1], normalised to unit L2 norm.
double legendre01(int j, double s);

/// L2-orthonormal polynomial basis of P_q on the reference triangle,
/// stored as monomial coefficients. Entry 0 is the constant sqrt(2);
/// all others have zero mean.
class OrthonormalBasis
{
public:
  explicit OrthonormalBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(coeffs_.cols()); }

  /// Monomial coefficients, one column per basis polynomial.
  const Eigen::MatrixXd& coefficients() const { return coeffs_; }

  /// Values (npts x size).
  Eigen::MatrixXd tabulate(std::span<const Point> points) const;

  /// Values plus gradients, each npts x size.
  void tabulate(std::span<const Point> points, Eigen::MatrixXd& values,
                Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) const;

private:
  int degree_;
  Eigen::MatrixXd coeffs_;
};

} // namespace equilibra::poly
