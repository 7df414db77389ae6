#include "equilibra/equilibration.hpp"

#include <exception>
#include <string>
#include <utility>

namespace equilibra
{

namespace
{
constexpr Index block_size = 2048;

using Buffer = std::vector<std::pair<Index, double>>;

Eigen::VectorXd dg_values(const Tabulation& tab, const Eigen::VectorXd& coeffs)
{
  Eigen::VectorXd v = Eigen::VectorXd::Zero(tab.num_points);
  for (int p = 0; p < tab.num_points; ++p)
    for (int i = 0; i < tab.num_basis; ++i)
      v[p] += coeffs[i] * tab.value(p, i);
  return v;
}

struct RowTabulations
{
  Tabulation flux, rhs;
};

PatchRowData patch_row_data(const EquilibrationContext& ctx, const PatchSystem& sys,
                            const Mesh& mesh, const FluxRow& row, const RowTabulations& tabs)
{
  const int n = sys.num_cells();
  const int nq = ctx.num_points();
  PatchRowData data;
  for (int i = 0; i < n; ++i)
  {
    const Index c = sys.patch.cells[i];
    Eigen::MatrixXd f(nq, 2);
    f.col(0) = dg_values(tabs.flux, row.flux_x.cell_coefficients(c));
    f.col(1) = dg_values(tabs.flux, row.flux_y.cell_coefficients(c));
    data.flux.push_back(std::move(f));
    data.rhs.push_back(dg_values(tabs.rhs, row.rhs.cell_coefficients(c)));
  }
  for (std::size_t e = 0; e < sys.patch.facets.size(); ++e)
  {
    if (sys.tags[e] == FacetTag::Neumann)
      data.neumann.push_back(
          neumann_moments(ctx, mesh, sys.patch.facets[e], sys.patch.vertex, row.neumann));
    else
      data.neumann.emplace_back();
  }
  return data;
}

// Global (dof, value) pairs of a patch function, each patch DOF once
void emit(const EquilibrationContext& ctx, const PatchSystem& sys, const Eigen::VectorXd& local,
          Buffer& out)
{
  const int n = sys.num_cells();
  const int nd = ctx.dofs_per_cell();
  const ReferenceElement& rt = ctx.rt;
  for (int i = 0; i < n; ++i)
  {
    auto put = [&](int d) { out.emplace_back(sys.dofs[i][d], sys.signs[i][d] * local[i * nd + d]); };
    for (int d : rt.facet_dofs(sys.incoming_local(i)))
      put(d);
    if (!sys.patch.closed() && i == n - 1)
      for (int d : rt.facet_dofs(sys.outgoing_local(i)))
        put(d);
    for (int d : rt.interior_dofs())
      put(d);
  }
}

// All patch work for vertex z, written into one buffer per row
void process_vertex(const EquilibrationContext& ctx, const FunctionSpace& rt_space,
                    const std::vector<FluxRow>& rows, const std::vector<RowTabulations>& tabs,
                    const EquilibrationOptions& options, Index z, std::vector<Buffer>& out)
{
  const Mesh& mesh = rt_space.mesh();
  const PatchSystem sys = make_patch_system(ctx, rt_space, z, options.cell_weight);
  std::vector<Eigen::VectorXd> local;
  for (std::size_t r = 0; r < rows.size(); ++r)
  {
    const PatchRowData data = patch_row_data(ctx, sys, mesh, rows[r], tabs[r]);
    local.push_back(equilibrate_patch_semiexplicit(ctx, sys, data).total());
  }
  if (options.weak_symmetry)
    impose_weak_symmetry_patch(ctx, sys, local[0], local[1]);
  out.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
  {
    out[r].clear();
    emit(ctx, sys, local[r], out[r]);
  }
}
int rhs_quadrature_degree(const PrimalSolution& uh, int m)
{
  return std::max(uh.quadrature_degree, 2 * rhs_degree(m));
}
} // namespace

EquilibratedField equilibrate(const Mesh& mesh, const std::vector<FluxRow>& rows,
                              const EquilibrationOptions& options)
{
  const int m = options.m;
  if (m < 1)
    throw ConfigurationError("flux degree m must be at least 1");
  if (options.primal_degree > 0 && m < options.primal_degree)
    throw ConfigurationError("flux degree m = " + std::to_string(m) +
                             " is below the primal degree k = " +
                             std::to_string(options.primal_degree));
  if (rows.empty())
    throw ConfigurationError("nothing to equilibrate");
  if (options.weak_symmetry)
  {
    if (rows.size() != 2)
      throw ConfigurationError("weak symmetry needs exactly two stress rows");
    if (m < 2 || (options.primal_degree > 0 && options.primal_degree < 2))
      throw ConfigurationError("weak symmetry requires k >= 2 and m >= 2");
    for (Index z = 0; z < mesh.num_vertices(); ++z)
      if (count_interior_facets(mesh, z) < 2)
        throw MeshError("vertex " + std::to_string(z) + " at (" +
                        std::to_string(mesh.vertex(z).x()) + ", " +
                        std::to_string(mesh.vertex(z).y()) +
                        ") has fewer than two interior facets in its patch");
  }

  if (options.cell_weight.size() > 0 &&
      (options.cell_weight.size() != mesh.num_cells() || !(options.cell_weight.array() > 0).all()))
    throw ConfigurationError("cell weights must be positive, one per cell");

  const EquilibrationContext ctx(m);
  auto space = std::make_shared<FunctionSpace>(mesh, ReferenceElement::raviart_thomas(m));
  std::vector<RowTabulations> tabs;
  for (const FluxRow& row : rows)
    tabs.push_back({row.flux_x.space->element().tabulate(ctx.rule.points),
                    row.rhs.space->element().tabulate(ctx.rule.points)});

  EquilibratedField result;
  result.space = space;
  for (std::size_t r = 0; r < rows.size(); ++r)
    result.rows.emplace_back(space);

  const Index nv = mesh.num_vertices();
  std::vector<std::vector<Buffer>> buffers(block_size);
  for (Index start = 0; start < nv; start += block_size)
  {
    const Index stop = std::min(nv, start + block_size);
    if (options.execution == Execution::Serial)
    {
      for (Index z = start; z < stop; ++z)
        process_vertex(ctx, *space, rows, tabs, options, z, buffers[z - start]);
    }
    else
    {
      std::exception_ptr error;
      Index error_vertex = nv;
#pragma omp parallel for schedule(dynamic, 16)
      for (Index z = start; z < stop; ++z)
      {
        try
        {
          process_vertex(ctx, *space, rows, tabs, options, z, buffers[z - start]);
        }
        catch (...)
        {
#pragma omp critical(equilibra_patch_error)
          if (z < error_vertex)
          {
            error_vertex = z;
            error = std::current_exception();
          }
        }
      }
      if (error)
        std::rethrow_exception(error);
    }
    // accumulation in vertex order keeps the sums independent of scheduling
    for (Index z = start; z < stop; ++z)
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& [dof, value] : buffers[z - start][r])
          result.rows[r].x[dof] += value;
  }
  return result;
}

Eigen::VectorXd inverse_kappa(const Mesh& mesh, const PoissonProblem& problem)
{
  Eigen::VectorXd w(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c)
    w[c] = 1.0 / cell_kappa(mesh, c, problem);
  return w;
}

std::vector<FluxRow> poisson_flux_rows(const PrimalSolution& uh, const PoissonProblem& problem,
                                       int m)
{
  const int k = uh.space->element().degree();
  if (m < k)
    throw ConfigurationError("flux degree m must be at least the primal degree k");
  const Mesh& mesh = uh.space->mesh();
  auto flux_space = std::make_shared<FunctionSpace>(mesh, ReferenceElement::disc_lagrange(m - 1));
  auto rhs_space =
      std::make_shared<FunctionSpace>(mesh, ReferenceElement::disc_lagrange(rhs_degree(m)));
  const int qd = default_quadrature_degree(k, m);
  auto flux = project_l2(flux_space, 2, poisson_flux(uh, problem), qd);
  // projecting with the load vector's rule keeps every patch problem compatible
  const int qf = rhs_quadrature_degree(uh, m);
  ScalarField f = problem.source;
  auto rhs = project_l2(rhs_space, 1,
                        make_evaluator(mesh, 1, [f](const Point& x, double* out) {
                          out[0] = f ? f(x) : 0.0;
                        }),
                        qf);
  FluxRow row;
  row.flux_x = std::move(flux[0]);
  row.flux_y = std::move(flux[1]);
  row.rhs = std::move(rhs[0]);
  return {row};
}

std::vector<FluxRow> elasticity_flux_rows(const PrimalSolution& uh,
                                          const ElasticityProblem& problem, int m)
{
  const int k = uh.space->element().degree();
  if (m < k)
    throw ConfigurationError("flux degree m must be at least the primal degree k");
  const Mesh& mesh = uh.space->mesh();
  auto flux_space = std::make_shared<FunctionSpace>(mesh, ReferenceElement::disc_lagrange(m - 1));
  auto rhs_space =
      std::make_shared<FunctionSpace>(mesh, ReferenceElement::disc_lagrange(rhs_degree(m)));
  const int qd = default_quadrature_degree(k, m);
  auto stress = project_l2(flux_space, 4, elasticity_stress(uh, problem.lambda), qd);
  const int qf = rhs_quadrature_degree(uh, m);
  VectorField f = problem.body_force;
  auto rhs = project_l2(rhs_space, 2,
                        make_evaluator(mesh, 2, [f](const Point& x, double* out) {
                          const Point v = f ? f(x) : Point(0, 0);
                          out[0] = -v.x();
                          out[1] = -v.y();
                        }),
                        qf);
  std::vector<FluxRow> rows(2);
  for (int i = 0; i < 2; ++i)
  {
    rows[i].flux_x = std::move(stress[2 * i]);
    rows[i].flux_y = std::move(stress[2 * i + 1]);
    rows[i].rhs = std::move(rhs[i]);
    if (problem.traction)
    {
      VectorField t = problem.traction;
      rows[i].neumann = [t, i](const Point& x) { return t(x)[i]; };
    }
  }
  return rows;
}

} // namespace equilibra
