#include <equilibra/polynomials.hpp>
#include <equilibra/quadrature.hpp>

#include <cmath>

namespace equilibra::poly
{

std::vector<std::pair<int, int>> monomial_exponents(int degree)
{
  std::vector<std::pair<int, int>> exps;
  for (int d = 0; d <= degree; ++d)
    for (int b = 0; b <= d; ++b)
      exps.emplace_back(d - b, b);
  return exps;
}

MonomialTable tabulate_monomials(std::span<const Point> points, int degree)
{
  const auto exps = monomial_exponents(degree);
  const auto np = static_cast<Eigen::Index>(points.size());
  const auto nm = static_cast<Eigen::Index>(exps.size());

  MonomialTable t;
  t.values.resize(np, nm);
  t.dx.resize(np, nm);
  t.dy.resize(np, nm);

  // powers[p][e] = x^e, y^e
  std::vector<double> px(degree + 1), py(degree + 1);
  for (Eigen::Index p = 0; p < np; ++p)
  {
    px[0] = py[0] = 1.0;
    for (int e = 1; e <= degree; ++e)
    {
      px[e] = px[e - 1] * points[p].x();
      py[e] = py[e - 1] * points[p].y();
    }
    for (Eigen::Index i = 0; i < nm; ++i)
    {
      const auto [a, b] = exps[i];
      t.values(p, i) = px[a] * py[b];
      t.dx(p, i) = (a > 0) ? a * px[a - 1] * py[b] : 0.0;
      t.dy(p, i) = (b > 0) ? b * px[a] * py[b - 1] : 0.0;
    }
  }
  return t;
}

double legendre01(int j, double s)
{
  const double x = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = x;
  if (j == 0)
    return 1.0;
  for (int n = 1; n < j; ++n)
  {
    const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

OrthonormalBasis::OrthonormalBasis(int degree) : degree_(degree)
{
  const int n = dimension(degree);
  const TriangleRule rule = triangle_rule(2 * degree + 2);
  const MonomialTable t = tabulate_monomials(rule.points, degree);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));

  // Modified Gram-Schmidt, two passes
  coeffs_ = Eigen::MatrixXd::Identity(n, n);
  auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b)
  {
    const Eigen::VectorXd va = t.values * a;
    const Eigen::VectorXd vb = t.values * b;
    return (va.array() * vb.array() * w.array()).sum();
  };
  for (int i = 0; i < n; ++i)
  {
    Eigen::VectorXd c = coeffs_.col(i);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j)
        c -= inner(c, coeffs_.col(j)) * coeffs_.col(j);
    coeffs_.col(i) = c / std::sqrt(inner(c, c));
  }
}

Eigen::MatrixXd OrthonormalBasis::tabulate(std::span<const Point> points) const
{
  return tabulate_monomials(points, degree_).values * coeffs_;
}

void OrthonormalBasis::tabulate(std::span<const Point> points, Eigen::MatrixXd& values,
                                Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) const
{
  const MonomialTable t = tabulate_monomials(points, degree_);
  values = t.values * coeffs_;
  dx = t.dx * coeffs_;
  dy = t.dy * coeffs_;
}

} // namespace equilibra::poly
