#pragma once

#include "common.hpp"

#include <vector>

namespace equilibra
{

/// Quadrature rule on [0, 1].
struct LineRule
{
  std::vector<double> points;
  std::vector<double> weights;
};

/// Quadrature rule on the reference triangle {(0,0), (1,0), (0,1)}.
/// Weights sum to the reference area 1/2.
struct TriangleRule
{
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// n-point Gauss rule on [0,1] for the weight (1-s)^a s^b, a, b > -1
/// (Golub-Welsch). Exact for polynomials of degree 2n-1 against the weight.
LineRule gauss_jacobi(int n, double a, double b);

/// n-point Gauss-Legendre rule on [0,1].
LineRule gauss_legendre(int n);

/// Collapsed (Duffy) Gauss rule on the reference triangle, exact for
/// polynomials up to the requested degree.
TriangleRule triangle_rule(int degree);

} // namespace equilibra
