#pragma once

#include "adaptivity.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace equilibra
{

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Column order of results.csv.
inline const std::vector<std::string>& results_columns()
{
  static const std::vector<std::string> columns = {
      "level", "n_cells", "n_dof",   "err",     "eta",    "eta_flux", "eta_osc",
      "eta_asym", "i_eff", "eoc", "t_prime", "t_eqlb", "t_tot"};
  return columns;
}

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Metadata as `# key = value` lines, then the header and one row per level.
void write_results_csv(std::ostream& out, const Metadata& metadata,
                       const std::vector<LevelRecord>& history);

struct ResultsTable
{
  Metadata metadata;
  std::vector<LevelRecord> history;
};

/// Inverse of write_results_csv. Throws std::runtime_error on malformed input.
ResultsTable read_results_csv(std::istream& in);

using CellData = std::vector<std::pair<std::string, Eigen::VectorXd>>;

/// Legacy ASCII VTK unstructured grid with per-cell scalars.
void write_vtk(std::ostream& out, const Mesh& mesh, const CellData& cell_data);

} // namespace equilibra
