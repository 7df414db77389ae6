#include <equilibra/quadrature.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace equilibra
{

LineRule gauss_jacobi(int n, double a, double b)
{
  if (n < 1)
    throw ConfigurationError("gauss_jacobi: need at least one point");
  if (a <= -1.0 or b <= -1.0)
    throw ConfigurationError("gauss_jacobi: exponents must exceed -1");

  // Jacobi matrix of P^(a,b) on [-1,1] with weight (1-x)^a (1+x)^b
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
  {
    const double s = 2.0 * i + a + b;
    if (i == 0)
      T(0, 0) = (b - a) / (a + b + 2.0);
    else
      T(i, i) = (b * b - a * a) / (s * (s + 2.0));

    if (i + 1 < n)
    {
      const double k = i + 1.0;
      const double sk = 2.0 * k + a + b;
      const double beta = 4.0 * k * (k + a) * (k + b) * (k + a + b)
                          / (sk * sk * (sk + 1.0) * (sk - 1.0));
      T(i, i + 1) = T(i + 1, i) = std::sqrt(beta);
    }
  }

  const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0)
                              + std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);

  // Map x in [-1,1] to s = (1+x)/2; (1-x)^a (1+x)^b dx = 2^(a+b+1) (1-s)^a s^b ds
  const double scale = std::exp(-(a + b + 1.0) * std::log(2.0));
  for (int i = 0; i < n; ++i)
  {
    const double v0 = eig.eigenvectors()(0, i);
    rule.points[i] = 0.5 * (1.0 + eig.eigenvalues()(i));
    rule.weights[i] = mu0 * v0 * v0 * scale;
  }
  return rule;
}

LineRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

TriangleRule triangle_rule(int degree)
{
  if (degree < 0)
    throw ConfigurationError("triangle_rule: negative degree");

  // x = u, y = v (1 - u): Jacobian (1-u) absorbed into the Jacobi weight.
  const int n = std::max(1, (degree + 2) / 2);
  const LineRule ru = gauss_jacobi(n, 1.0, 0.0);
  const LineRule rv = gauss_legendre(n);

  TriangleRule rule;
  rule.degree = degree;
  rule.points.reserve(n * n);
  rule.weights.reserve(n * n);
  for (int i = 0; i < n; ++i)
  {
    for (int j = 0; j < n; ++j)
    {
      const double u = ru.points[i];
      rule.points.emplace_back(u, rv.points[j] * (1.0 - u));
      rule.weights.push_back(ru.weights[i] * rv.weights[j]);
    }
  }
  return rule;
}

} // namespace equilibra
