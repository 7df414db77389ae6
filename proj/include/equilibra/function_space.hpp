#pragma once

#include "elements.hpp"
#include "mesh.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace equilibra
{

/// Global numbering of the DOFs of a reference element over a mesh.
///
/// Lagrange: vertex DOFs, then facet-interior DOFs (ordered along the global
/// facet direction, lower to higher vertex id), then cell-interior DOFs.
/// Discontinuous Lagrange: cell by cell. Raviart-Thomas: m DOFs per facet
/// (moments against L_j in the global facet orientation), then the interior
/// DOFs cell by cell.
///
/// The global basis function of DOF d restricted to cell c equals
/// cell_signs(c)[i] times the local basis function i, where
/// cell_dofs(c)[i] = d. Signs are +1 except for Raviart-Thomas facet DOFs.
/// The mesh must outlive the space.
class FunctionSpace
{
public:
  FunctionSpace(const Mesh& mesh, ReferenceElement element);

  const Mesh& mesh() const { return *mesh_; }
  const ReferenceElement& element() const { return element_; }
  Index num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return element_.num_dofs(); }

  std::span<const Index> cell_dofs(Index c) const
  {
    return {dofs_.data() + c * dofs_per_cell(), static_cast<std::size_t>(dofs_per_cell())};
  }
  std::span<const double> cell_signs(Index c) const
  {
    return {signs_.data() + c * dofs_per_cell(), static_cast<std::size_t>(dofs_per_cell())};
  }

  /// Lagrange DOFs lying on boundary facets with the given tag (sorted).
  std::vector<Index> boundary_dofs(FacetTag tag) const;

  /// Physical coordinates of Lagrange DOFs.
  std::vector<Point> dof_coordinates() const;

private:
  const Mesh* mesh_;
  ReferenceElement element_;
  Index num_dofs_ = 0;
  std::vector<Index> dofs_;
  std::vector<double> signs_;
};

/// Coefficient vector over a function space.
struct DiscreteFunction
{
  std::shared_ptr<const FunctionSpace> space;
  Eigen::VectorXd x;

  DiscreteFunction() = default;
  explicit DiscreteFunction(std::shared_ptr<const FunctionSpace> V)
      : space(std::move(V)), x(Eigen::VectorXd::Zero(space->num_dofs()))
  {
  }

  /// Local (sign adjusted) coefficients on cell c.
  Eigen::VectorXd cell_coefficients(Index c) const;
};

/// Values of a (possibly vector valued) field at reference points of a
/// cell: fills `values` with one row per point and one column per component.
using CellEvaluator = std::function<void(Index cell, std::span<const Point> ref_points,
                                         Eigen::MatrixXd& values)>;

/// Wrap a function of physical coordinates as a cell evaluator.
CellEvaluator make_evaluator(const Mesh& mesh, int components,
                             std::function<void(const Point&, double*)> f);

/// L2 projection of a field with `components` components onto a
/// discontinuous Lagrange space, one function per component.
std::vector<DiscreteFunction> project_l2(std::shared_ptr<const FunctionSpace> space,
                                         int components, const CellEvaluator& f,
                                         int quadrature_degree);

/// Apply the Raviart-Thomas DOF functionals to a vector field.
DiscreteFunction interpolate_rt(std::shared_ptr<const FunctionSpace> space,
                                const std::function<Point(const Point&)>& field);

/// Nodal interpolation into a Lagrange space.
DiscreteFunction interpolate_lagrange(std::shared_ptr<const FunctionSpace> space,
                                      const std::function<double(const Point&)>& f);

/// Values (npts) of a scalar function on cell c given a tabulation of its
/// element at reference points.
Eigen::VectorXd evaluate_scalar(const DiscreteFunction& u, Index c, const Tabulation& tab);

/// Physical gradients (npts x 2) of a scalar Lagrange function on cell c.
Eigen::MatrixXd evaluate_gradient(const DiscreteFunction& u, Index c, const Tabulation& tab,
                                  const AffineMap& map);

/// Piola-mapped values (npts x 2) of a Raviart-Thomas function on cell c.
Eigen::MatrixXd evaluate_rt(const DiscreteFunction& sigma, Index c, const Tabulation& tab,
                            const AffineMap& map);

/// Divergence (npts) of a Raviart-Thomas function on cell c.
Eigen::VectorXd evaluate_rt_divergence(const DiscreteFunction& sigma, Index c,
                                       const Tabulation& tab, const AffineMap& map);

/// Default quadrature degree for primal degree k and flux degree m.
inline int default_quadrature_degree(int k, int m) { return 2 * std::max(k, m) + 2; }

} // namespace equilibra
