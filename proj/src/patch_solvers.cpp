#include "equilibra/patch_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace equilibra
{

namespace
{
const Point hat_gradient[3] = {Point(-1, -1), Point(1, 0), Point(0, 1)};

std::string format_g(double v)
{
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3g", v);
  return buffer;
}

} // namespace

EquilibrationContext::EquilibrationContext(int m_)
    : m(m_), rt(ReferenceElement::raviart_thomas(m_)), rule(triangle_rule(2 * m_ + 2)),
      line(gauss_legendre(m_ + 3))
{
  rt_tab = rt.tabulate(rule.points);
  q_values = poly::OrthonormalBasis(m - 1).tabulate(rule.points);
  const int nq = num_points();
  bary.resize(nq, 3);
  for (int q = 0; q < nq; ++q)
  {
    const Point& p = rule.points[q];
    bary(q, 0) = 1.0 - p.x() - p.y();
    bary(q, 1) = p.x();
    bary(q, 2) = p.y();
  }
  const poly::OrthonormalBasis pbasis(m - 1);
  const std::vector<Point>& ip = rt.interpolation_points();
  Eigen::MatrixXd weighted = pbasis.tabulate(rule.points).transpose();
  for (int q = 0; q < nq; ++q)
    weighted.col(q) *= rule.weights[q];
  extend = pbasis.tabulate(ip) * weighted;
  interp_bary.resize(static_cast<Eigen::Index>(ip.size()), 3);
  for (std::size_t p = 0; p < ip.size(); ++p)
    interp_bary.row(static_cast<Eigen::Index>(p)) << 1.0 - ip[p].x() - ip[p].y(), ip[p].x(), ip[p].y();

  const int nd = rt.num_dofs();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
    {
      Eigen::MatrixXd& Kab = K[2 * a + b];
      Kab = Eigen::MatrixXd::Zero(nd, nd);
      for (int q = 0; q < nq; ++q)
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j < nd; ++j)
            Kab(i, j) += rule.weights[q] * rt_tab.value(q, i, a) * rt_tab.value(q, j, b);
    }
}

Eigen::MatrixXd EquilibrationContext::mass(const AffineMap& map) const
{
  const Eigen::Matrix2d G = map.J.transpose() * map.J;
  Eigen::MatrixXd M = G(0, 0) * K[0];
  M += G(0, 1) * K[1];
  M += G(1, 0) * K[2];
  M += G(1, 1) * K[3];
  return M / map.detJ;
}

PatchSystem make_patch_system(const EquilibrationContext& ctx, const FunctionSpace& rt_space,
                              Index z, const Eigen::VectorXd& cell_weight)
{
  const Mesh& mesh = rt_space.mesh();
  const int m = ctx.m;
  const int nd = ctx.dofs_per_cell();
  PatchSystem sys;
  sys.patch = build_patch(mesh, z);
  const Patch& P = sys.patch;
  const int n = P.num_cells();
  sys.vertices.push_back(z);

  for (Index f : P.facets)
  {
    const FacetTag tag = mesh.on_boundary(f) ? mesh.facet_tag(f) : FacetTag::Interior;
    sys.tags.push_back(tag);
  }
  // facets touching z on the boundary are the patch end facets
  for (Index f : P.facets)
    if (mesh.on_boundary(f))
    {
      sys.touches_dirichlet |= mesh.facet_tag(f) == FacetTag::Dirichlet;
      sys.touches_neumann |= mesh.facet_tag(f) == FacetTag::Neumann;
    }

  for (int i = 0; i < n; ++i)
  {
    const Index c = P.cells[i];
    sys.maps.push_back(mesh.affine_map(c));
    const auto s = rt_space.cell_signs(c);
    const auto d = rt_space.cell_dofs(c);
    sys.cell_vertices.push_back(mesh.cell(c));
    for (Index w : mesh.cell(c))
      if (std::find(sys.vertices.begin(), sys.vertices.end(), w) == sys.vertices.end())
        sys.vertices.push_back(w);
    sys.signs.emplace_back(s.begin(), s.end());
    sys.dofs.emplace_back(d.begin(), d.end());
    sys.mass.push_back(ctx.mass(sys.maps.back()));
    if (cell_weight.size() > 0)
      sys.mass.back() *= cell_weight[c];
  }

  // Divergence-free correction space
  std::vector<Eigen::VectorXd> columns;
  const Eigen::Index N = static_cast<Eigen::Index>(n) * nd;
  const int nf = static_cast<int>(P.facets.size());
  for (int e = 0; e < nf; ++e)
  {
    if (sys.tags[e] == FacetTag::Neumann)
      continue;
    // cells adjacent to facet e inside the patch: i = e (incoming) and e-1 (outgoing)
    for (int j = 1; j < m; ++j)
    {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(N);
      if (e < n)
      {
        const int dof = ctx.rt.facet_dofs(sys.incoming_local(e))[j];
        col[e * nd + dof] = sys.signs[e][dof];
      }
      const int prev = P.closed() ? (e + n - 1) % n : e - 1;
      if (prev >= 0)
      {
        const int dof = ctx.rt.facet_dofs(sys.outgoing_local(prev))[j];
        col[prev * nd + dof] = sys.signs[prev][dof];
      }
      columns.push_back(std::move(col));
    }
  }
  for (int i = 0; i < n; ++i)
    for (int dof : ctx.rt.divfree_interior_dofs())
    {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(N);
      col[i * nd + dof] = 1.0;
      columns.push_back(std::move(col));
    }
  const bool free_rotation =
      P.closed() || (sys.tags.front() != FacetTag::Neumann && sys.tags.back() != FacetTag::Neumann);
  if (free_rotation)
  {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < n; ++i)
    {
      col[i * nd + ctx.rt.facet_dofs(sys.incoming_local(i))[0]] = -1.0;
      col[i * nd + ctx.rt.facet_dofs(sys.outgoing_local(i))[0]] = 1.0;
    }
    columns.push_back(std::move(col));
  }

  sys.basis.resize(N, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k)
    sys.basis.col(static_cast<Eigen::Index>(k)) = columns[k];

  sys.A = Eigen::MatrixXd::Zero(sys.basis.cols(), sys.basis.cols());
  for (int i = 0; i < n; ++i)
  {
    const auto Bi = sys.basis.middleRows(static_cast<Eigen::Index>(i) * nd, nd);
    sys.A.noalias() += Bi.transpose() * sys.mass[i] * Bi;
  }
  sys.llt.compute(sys.A);
  if (sys.llt.info() != Eigen::Success)
    throw SingularSystemError("patch Gram matrix is not positive definite at vertex " +
                              std::to_string(z));
  return sys;
}

Eigen::VectorXd neumann_moments(const EquilibrationContext& ctx, const Mesh& mesh, Index f, Index z,
                                const std::function<double(const Point&)>& t)
{
  Eigen::VectorXd N = Eigen::VectorXd::Zero(ctx.m);
  if (!t)
    return N;
  const auto& fv = mesh.facet(f);
  const Point a = mesh.vertex(fv[0]);
  const Point b = mesh.vertex(fv[1]);
  const double len = (b - a).norm();
  for (std::size_t q = 0; q < ctx.line.points.size(); ++q)
  {
    const double s = ctx.line.points[q];
    const double phi = fv[0] == z ? 1.0 - s : s;
    const double w = ctx.line.weights[q] * len * phi * t(a + s * (b - a));
    for (int j = 0; j < ctx.m; ++j)
      N[j] += w * poly::legendre01(j, s);
  }
  return N;
}

Eigen::VectorXd explicit_step(const EquilibrationContext& ctx, const PatchSystem& sys,
                              const PatchRowData& row)
{
  const Patch& P = sys.patch;
  const int n = P.num_cells();
  const int nd = ctx.dofs_per_cell();
  const int nq = ctx.num_points();
  const int m = ctx.m;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * nd);

  // Cell targets r = phi_z g + grad phi_z . sigma_h, their means and
  // higher moments
  std::vector<double> R(n, 0.0);
  for (int i = 0; i < n; ++i)
  {
    const int lz = P.local_vertex[i];
    const AffineMap& map = sys.maps[i];
    const Point gphi = map.K.transpose() * hat_gradient[lz];
    const auto div_dofs = ctx.rt.divergence_dofs();
    for (int q = 0; q < nq; ++q)
    {
      const double r = ctx.bary(q, lz) * row.rhs[i][q] + gphi.x() * row.flux[i](q, 0) +
                       gphi.y() * row.flux[i](q, 1);
      const double w = ctx.rule.weights[q] * map.detJ * r;
      R[i] += w;
      for (std::size_t l = 0; l < div_dofs.size(); ++l)
        v[i * nd + div_dofs[l]] += w * ctx.q_values(q, static_cast<int>(l) + 1);
    }
  }

  // Neumann data on the patch end facets: moments j >= 1 and the fluxes
  // F_e through E_e (counter-clockwise, from cell e-1 into cell e)
  const int nf = static_cast<int>(P.facets.size());
  for (int e = 0; e < nf; ++e)
  {
    if (sys.tags[e] != FacetTag::Neumann)
      continue;
    const int i = e < n ? e : n - 1;
    const int lf = e < n ? sys.incoming_local(i) : sys.outgoing_local(i);
    for (int j = 1; j < m; ++j)
    {
      const int dof = ctx.rt.facet_dofs(lf)[j];
      v[i * nd + dof] = sys.signs[i][dof] * row.neumann[e][j];
    }
  }

  std::vector<double> F(nf + 1, 0.0);
  if (P.closed() || sys.tags.front() == FacetTag::Neumann || sys.tags.back() != FacetTag::Neumann)
  {
    if (!P.closed() && sys.tags.front() == FacetTag::Neumann)
      F[0] = -row.neumann[0][0];
    for (int i = 0; i < n; ++i)
      F[i + 1] = F[i] + R[i];
    double mismatch = 0, scale = std::abs(F[0]);
    for (int i = 0; i < n; ++i)
      scale = std::max(scale, std::abs(R[i]));
    if (P.closed())
      mismatch = std::abs(F[n]);
    else if (sys.tags.back() == FacetTag::Neumann)
      mismatch = std::abs(F[n] - row.neumann[n][0]);
    if (mismatch > 1e-6 * std::max(scale, 1e-300) && mismatch > 1e-14)
      throw std::logic_error("incompatible patch data at vertex " + std::to_string(P.vertex) +
                             " (imbalance " + format_g(mismatch) + ", scale " + format_g(scale) + ")");
  }
  else
  {
    F[n] = row.neumann[n][0];
    for (int i = n - 1; i >= 0; --i)
      F[i] = F[i + 1] - R[i];
  }

  for (int i = 0; i < n; ++i)
  {
    v[i * nd + ctx.rt.facet_dofs(sys.incoming_local(i))[0]] = -F[i];
    v[i * nd + ctx.rt.facet_dofs(sys.outgoing_local(i))[0]] = F[i + 1];
  }
  return v;
}

Eigen::VectorXd interpolate_hat_flux(const EquilibrationContext& ctx, const PatchSystem& sys,
                                     int i, const Eigen::MatrixXd& flux)
{
  const AffineMap& map = sys.maps[i];
  const int lz = sys.patch.local_vertex[i];
  // contravariant pull-back to the reference cell, then extension to the
  // interpolation points
  const Eigen::MatrixXd pulled = flux * (map.detJ * map.K.transpose());
  const Eigen::MatrixXd at_points = ctx.extend * pulled;
  const Eigen::Index np = at_points.rows();
  Eigen::VectorXd values(2 * np);
  for (Eigen::Index p = 0; p < np; ++p)
  {
    values[2 * p] = ctx.interp_bary(p, lz) * at_points(p, 0);
    values[2 * p + 1] = ctx.interp_bary(p, lz) * at_points(p, 1);
  }
  return ctx.rt.interpolation_matrix() * values;
}

Eigen::VectorXd minimisation_load(const EquilibrationContext& ctx, const PatchSystem& sys,
                                  const PatchRowData& row, const Eigen::VectorXd& v)
{
  const int n = sys.num_cells();
  const int nd = ctx.dofs_per_cell();
  Eigen::VectorXd L = Eigen::VectorXd::Zero(sys.basis.cols());
  for (int i = 0; i < n; ++i)
  {
    const Eigen::VectorXd d =
        interpolate_hat_flux(ctx, sys, i, row.flux[i]) - v.segment(static_cast<Eigen::Index>(i) * nd, nd);
    L.noalias() += sys.basis.middleRows(static_cast<Eigen::Index>(i) * nd, nd).transpose() * (sys.mass[i] * d);
  }
  return L;
}

PatchContribution equilibrate_patch_semiexplicit(const EquilibrationContext& ctx,
                                                 const PatchSystem& sys, const PatchRowData& row)
{
  PatchContribution out;
  out.explicit_part = explicit_step(ctx, sys, row);
  out.coefficients = sys.llt.solve(minimisation_load(ctx, sys, row, out.explicit_part));
  out.correction = sys.basis * out.coefficients;
  return out;
}

WeakSymmetrySystem weak_symmetry_system(const EquilibrationContext& ctx, const PatchSystem& sys,
                                        const Eigen::VectorXd& row1, const Eigen::VectorXd& row2)
{
  const int nd = ctx.dofs_per_cell();
  const int nq = ctx.num_points();
  const auto nv = static_cast<Eigen::Index>(sys.vertices.size());
  WeakSymmetrySystem ws;
  ws.Gx = Eigen::MatrixXd::Zero(sys.size(), nv);
  ws.Gy = Eigen::MatrixXd::Zero(sys.size(), nv);
  Eigen::VectorXd hat_integrals = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < sys.num_cells(); ++i)
  {
    const AffineMap& map = sys.maps[i];
    for (int lv = 0; lv < 3; ++lv)
    {
      const auto y = std::find(sys.vertices.begin(), sys.vertices.end(), sys.cell_vertices[i][lv]) -
                     sys.vertices.begin();
      hat_integrals[y] += map.detJ / 6.0;
      for (int q = 0; q < nq; ++q)
      {
        const double wg = ctx.rule.weights[q] * ctx.bary(q, lv);
        for (int d = 0; d < nd; ++d)
        {
          // Piola value times detJ, which cancels against the measure
          const Point v = map.J * Point(ctx.rt_tab.value(q, d, 0), ctx.rt_tab.value(q, d, 1));
          ws.Gx(i * nd + d, y) += wg * v.x();
          ws.Gy(i * nd + d, y) += wg * v.y();
        }
      }
    }
  }
  ws.B1 = -sys.basis.transpose() * ws.Gy;
  ws.B2 = sys.basis.transpose() * ws.Gx;
  if (!sys.touches_dirichlet)
    ws.C = hat_integrals;
  ws.Lc = weak_symmetry_residual(ws, row1, row2);
  return ws;
}

Eigen::VectorXd weak_symmetry_residual(const WeakSymmetrySystem& ws, const Eigen::VectorXd& row1,
                                       const Eigen::VectorXd& row2)
{
  return ws.Gy.transpose() * row1 - ws.Gx.transpose() * row2;
}

Eigen::MatrixXd schur_complement(const Eigen::LLT<Eigen::MatrixXd>& A, const Eigen::MatrixXd& B1,
                                 const Eigen::MatrixXd& B2)
{
  return B1.transpose() * A.solve(B1) + B2.transpose() * A.solve(B2);
}

SchurSolution solve_schur(const Eigen::LLT<Eigen::MatrixXd>& A, const Eigen::MatrixXd& B1,
                          const Eigen::MatrixXd& B2, const Eigen::VectorXd& C,
                          const Eigen::VectorXd& Lc)
{
  const Eigen::MatrixXd X1 = A.solve(B1);
  const Eigen::MatrixXd X2 = A.solve(B2);
  const Eigen::Index nv = B1.cols();
  const Eigen::Index nc = C.size() > 0 ? 1 : 0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
  S.topLeftCorner(nv, nv) = B1.transpose() * X1 + B2.transpose() * X2;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);
  rhs.head(nv) = -Lc;
  if (nc)
  {
    // multiplier enters with a minus sign: S c - C lambda = -Lc
    S.block(0, nv, nv, 1) = -C;
    S.block(nv, 0, 1, nv) = C.transpose();
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible())
    throw SingularSystemError("weak symmetry Schur complement is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);

  SchurSolution out;
  out.c = sol.head(nv);
  out.lambda = nc ? sol[nv] : 0.0;
  out.u1 = -X1 * out.c;
  out.u2 = -X2 * out.c;
  return out;
}

SchurSolution impose_weak_symmetry_patch(const EquilibrationContext& ctx, const PatchSystem& sys,
                                         Eigen::VectorXd& row1, Eigen::VectorXd& row2)
{
  const WeakSymmetrySystem ws = weak_symmetry_system(ctx, sys, row1, row2);
  SchurSolution sol = solve_schur(sys.llt, ws.B1, ws.B2, ws.C, ws.Lc);
  row1.noalias() += sys.basis * sol.u1;
  row2.noalias() += sys.basis * sol.u2;
  return sol;
}

} // namespace equilibra
