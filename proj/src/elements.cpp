#include "equilibra/elements.hpp"
#include "equilibra/polynomials.hpp"
#include "equilibra/quadrature.hpp"

#include <array>
#include <cmath>
#include <string>

namespace equilibra
{

namespace
{
constexpr int max_lagrange_degree = 5;
constexpr int max_rt_degree = 5;

const std::array<ReferenceFacet, 3> facets = [] {
  const double r = 1.0 / std::sqrt(2.0);
  return std::array<ReferenceFacet, 3>{
      ReferenceFacet{Point(1, 0), Point(0, 1), Point(r, r), std::sqrt(2.0)},
      ReferenceFacet{Point(0, 0), Point(0, 1), Point(-1, 0), 1.0},
      ReferenceFacet{Point(0, 0), Point(1, 0), Point(0, -1), 1.0}};
}();
} // namespace

const ReferenceFacet& reference_facet(int f) { return facets.at(f); }

std::vector<Point> lagrange_nodes(int degree)
{
  std::vector<Point> nodes = {Point(0, 0), Point(1, 0), Point(0, 1)};
  const double h = 1.0 / degree;
  for (int f = 0; f < 3; ++f)
  {
    const ReferenceFacet& rf = facets[f];
    for (int i = 1; i < degree; ++i)
      nodes.push_back(rf.start + (i * h) * (rf.end - rf.start));
  }
  for (int j = 1; j < degree; ++j)
    for (int i = 1; i + j < degree; ++i)
      nodes.push_back(Point(i * h, j * h));
  return nodes;
}

ReferenceElement ReferenceElement::lagrange(int degree)
{
  if (degree < 1 || degree > max_lagrange_degree)
    throw ConfigurationError("Lagrange degree " + std::to_string(degree)
                             + " not supported (1.."
                             + std::to_string(max_lagrange_degree) + ")");
  ReferenceElement e;
  e.family_ = ElementFamily::Lagrange;
  e.degree_ = degree;
  e.value_size_ = 1;
  e.num_dofs_ = poly::dimension(degree);
  e.ipoints_ = lagrange_nodes(degree);
  e.imatrix_ = Eigen::MatrixXd::Identity(e.num_dofs_, e.num_dofs_);
  e.build_lagrange_layout();
  e.build_dual_basis();
  return e;
}

ReferenceElement ReferenceElement::disc_lagrange(int degree)
{
  if (degree < 0 || degree > max_lagrange_degree)
    throw ConfigurationError("discontinuous Lagrange degree " + std::to_string(degree)
                             + " not supported (0.."
                             + std::to_string(max_lagrange_degree) + ")");
  ReferenceElement e;
  e.family_ = ElementFamily::DiscLagrange;
  e.degree_ = degree;
  e.value_size_ = 1;
  e.num_dofs_ = poly::dimension(degree);
  if (degree == 0)
    e.ipoints_ = {Point(1.0 / 3.0, 1.0 / 3.0)};
  else
    e.ipoints_ = lagrange_nodes(degree);
  e.imatrix_ = Eigen::MatrixXd::Identity(e.num_dofs_, e.num_dofs_);
  for (int i = 0; i < e.num_dofs_; ++i)
    e.interior_dofs_.push_back(i);
  e.build_dual_basis();
  return e;
}

ReferenceElement ReferenceElement::raviart_thomas(int degree)
{
  if (degree < 1 || degree > max_rt_degree)
    throw ConfigurationError("Raviart-Thomas degree " + std::to_string(degree)
                             + " not supported (1.." + std::to_string(max_rt_degree)
                             + ")");
  const int m = degree;
  ReferenceElement e;
  e.family_ = ElementFamily::RaviartThomas;
  e.degree_ = m;
  e.value_size_ = 2;
  e.num_dofs_ = m * (m + 2);

  // Points: m+2 Gauss points per facet, then an interior rule
  const LineRule line = gauss_legendre(m + 2);
  const int nfp = static_cast<int>(line.points.size());
  for (int f = 0; f < 3; ++f)
    for (double s : line.points)
      e.ipoints_.push_back(facets[f].start + s * (facets[f].end - facets[f].start));
  const TriangleRule rule = triangle_rule(2 * m + 2);
  const int offset = 3 * nfp;
  e.ipoints_.insert(e.ipoints_.end(), rule.points.begin(), rule.points.end());

  const int npts = static_cast<int>(e.ipoints_.size());
  e.imatrix_ = Eigen::MatrixXd::Zero(e.num_dofs_, 2 * npts);

  // Facet normal moments against orthonormal Legendre polynomials
  for (int f = 0; f < 3; ++f)
  {
    const ReferenceFacet& rf = facets[f];
    for (int j = 0; j < m; ++j)
    {
      const int dof = f * m + j;
      e.facet_dofs_[f].push_back(dof);
      for (int q = 0; q < nfp; ++q)
      {
        const double w = line.weights[q] * rf.length * poly::legendre01(j, line.points[q]);
        const int p = f * nfp + q;
        e.imatrix_(dof, 2 * p) += w * rf.normal.x();
        e.imatrix_(dof, 2 * p + 1) += w * rf.normal.y();
      }
    }
  }

  // Divergence moments, written as boundary minus volume terms so the
  // functional only needs point values
  int dof = 3 * m;
  if (m >= 2)
  {
    const poly::OrthonormalBasis qbasis(m - 1);
    Eigen::MatrixXd qv, qdx, qdy;
    qbasis.tabulate(std::span<const Point>(e.ipoints_), qv, qdx, qdy);
    for (int l = 1; l < qbasis.size(); ++l, ++dof)
    {
      e.interior_dofs_.push_back(dof);
      e.divergence_dofs_.push_back(dof);
      for (int f = 0; f < 3; ++f)
      {
        const ReferenceFacet& rf = facets[f];
        for (int q = 0; q < nfp; ++q)
        {
          const int p = f * nfp + q;
          const double w = line.weights[q] * rf.length * qv(p, l);
          e.imatrix_(dof, 2 * p) += w * rf.normal.x();
          e.imatrix_(dof, 2 * p + 1) += w * rf.normal.y();
        }
      }
      for (std::size_t q = 0; q < rule.size(); ++q)
      {
        const int p = offset + static_cast<int>(q);
        e.imatrix_(dof, 2 * p) -= rule.weights[q] * qdx(p, l);
        e.imatrix_(dof, 2 * p + 1) -= rule.weights[q] * qdy(p, l);
      }
    }
  }

  // Moments against curl(b r), b = xy(1-x-y), r monomial of degree <= m-3
  if (m >= 3)
  {
    for (auto [a, b] : poly::monomial_exponents(m - 3))
    {
      e.interior_dofs_.push_back(dof);
      e.divfree_dofs_.push_back(dof);
      for (std::size_t q = 0; q < rule.size(); ++q)
      {
        const double x = rule.points[q].x();
        const double y = rule.points[q].y();
        // psi = x^(a+1) y^(b+1) (1 - x - y)
        const double xa = std::pow(x, a), yb = std::pow(y, b);
        const double t = 1.0 - x - y;
        const double dpsi_dx = (a + 1) * xa * y * yb * t - x * xa * y * yb;
        const double dpsi_dy = (b + 1) * x * xa * yb * t - x * xa * y * yb;
        const int p = offset + static_cast<int>(q);
        e.imatrix_(dof, 2 * p) += rule.weights[q] * dpsi_dy;
        e.imatrix_(dof, 2 * p + 1) -= rule.weights[q] * dpsi_dx;
      }
      ++dof;
    }
  }

  e.build_dual_basis();
  return e;
}

void ReferenceElement::build_lagrange_layout()
{
  const int k = degree_;
  for (int v = 0; v < 3; ++v)
    vertex_dofs_[v] = {v};
  int dof = 3;
  for (int f = 0; f < 3; ++f)
    for (int i = 1; i < k; ++i)
      facet_dofs_[f].push_back(dof++);
  for (; dof < num_dofs_; ++dof)
    interior_dofs_.push_back(dof);
}

void ReferenceElement::tabulate_prime(std::span<const Point> points,
                                      Eigen::MatrixXd& values,
                                      Eigen::MatrixXd& derivatives) const
{
  const int npts = static_cast<int>(points.size());
  if (family_ != ElementFamily::RaviartThomas)
  {
    const poly::MonomialTable t = poly::tabulate_monomials(points, degree_);
    values = t.values;
    derivatives.resize(2 * npts, t.values.cols());
    for (int p = 0; p < npts; ++p)
    {
      derivatives.row(2 * p) = t.dx.row(p);
      derivatives.row(2 * p + 1) = t.dy.row(p);
    }
    return;
  }

  const int m = degree_;
  const poly::MonomialTable t = poly::tabulate_monomials(points, m - 1);
  const int nlow = static_cast<int>(t.values.cols());
  const int nhom = m;
  const int nprime = 2 * nlow + nhom;
  values = Eigen::MatrixXd::Zero(2 * npts, nprime);
  derivatives = Eigen::MatrixXd::Zero(npts, nprime);
  for (int p = 0; p < npts; ++p)
  {
    for (int i = 0; i < nlow; ++i)
    {
      values(2 * p, i) = t.values(p, i);
      derivatives(p, i) = t.dx(p, i);
      values(2 * p + 1, nlow + i) = t.values(p, i);
      derivatives(p, nlow + i) = t.dy(p, i);
    }
    // Homogeneous monomials of degree m-1 are the last m entries
    for (int i = 0; i < nhom; ++i)
    {
      const double h = t.values(p, nlow - nhom + i);
      values(2 * p, 2 * nlow + i) = points[p].x() * h;
      values(2 * p + 1, 2 * nlow + i) = points[p].y() * h;
      derivatives(p, 2 * nlow + i) = (m + 1) * h;
    }
  }
}

void ReferenceElement::build_dual_basis()
{
  Eigen::MatrixXd pv, pd;
  tabulate_prime(std::span<const Point>(ipoints_), pv, pd);
  const Eigen::MatrixXd dual = imatrix_ * pv;
  if (dual.rows() != dual.cols())
    throw std::logic_error("element functionals and prime basis differ in size");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(dual);
  if (!lu.isInvertible())
    throw SingularSystemError("element DOF functionals are not unisolvent");
  coeffs_ = lu.inverse();
}

Tabulation ReferenceElement::tabulate(std::span<const Point> points) const
{
  Eigen::MatrixXd pv, pd;
  tabulate_prime(points, pv, pd);
  const Eigen::MatrixXd v = pv * coeffs_;
  const Eigen::MatrixXd d = pd * coeffs_;

  Tabulation tab;
  tab.num_points = static_cast<int>(points.size());
  tab.num_basis = num_dofs_;
  tab.value_size = value_size_;
  tab.values.resize(static_cast<std::size_t>(tab.num_points) * num_dofs_ * value_size_);
  const int dsize = (family_ == ElementFamily::RaviartThomas) ? 1 : 2;
  tab.derivatives.resize(static_cast<std::size_t>(tab.num_points) * num_dofs_ * dsize);
  for (int p = 0; p < tab.num_points; ++p)
    for (int i = 0; i < num_dofs_; ++i)
    {
      for (int c = 0; c < value_size_; ++c)
        tab.values[(p * num_dofs_ + i) * value_size_ + c] = v(p * value_size_ + c, i);
      for (int c = 0; c < dsize; ++c)
        tab.derivatives[(p * num_dofs_ + i) * dsize + c] = d(p * dsize + c, i);
    }
  return tab;
}

} // namespace equilibra
