#include "equilibra/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace equilibra
{

namespace
{
std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text)
{
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("results.csv: cannot parse number '" + text + "'");
  return v;
}
} // namespace

std::string format_double(double v)
{
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  if (ec != std::errc())
    throw std::runtime_error("cannot format number");
  return std::string(buffer, ptr);
}

void write_results_csv(std::ostream& out, const Metadata& metadata,
                       const std::vector<LevelRecord>& history)
{
  for (const auto& [key, value] : metadata)
    out << "# " << key << " = " << value << '\n';
  const auto& cols = results_columns();
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const LevelRecord& r : history)
  {
    out << r.level << ',' << r.n_cells << ',' << r.n_dof;
    for (double v : {r.err, r.eta, r.eta_flux, r.eta_osc, r.eta_asym, r.i_eff, r.eoc, r.t_prime,
                     r.t_eqlb, r.t_tot})
      out << ',' << format_double(v);
    out << '\n';
  }
}

ResultsTable read_results_csv(std::istream& in)
{
  ResultsTable table;
  std::string line;
  bool header = false;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line[0] == '#')
    {
      const std::string body = line.substr(1);
      const auto eq = body.find(" = ");
      if (eq == std::string::npos)
        throw std::runtime_error("results.csv: malformed comment line '" + line + "'");
      table.metadata.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 3)));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
      fields.push_back(field);
    if (!header)
    {
      if (fields != results_columns())
        throw std::runtime_error("results.csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    if (fields.size() != results_columns().size())
      throw std::runtime_error("results.csv: wrong number of fields in '" + line + "'");
    LevelRecord r;
    r.level = std::stoi(fields[0]);
    r.n_cells = static_cast<Index>(std::stol(fields[1]));
    r.n_dof = static_cast<Index>(std::stol(fields[2]));
    double* targets[] = {&r.err, &r.eta, &r.eta_flux, &r.eta_osc, &r.eta_asym,
                         &r.i_eff, &r.eoc, &r.t_prime, &r.t_eqlb, &r.t_tot};
    for (std::size_t i = 0; i < 10; ++i)
      *targets[i] = parse_double(fields[3 + i]);
    table.history.push_back(r);
  }
  if (!header)
    throw std::runtime_error("results.csv: missing header");
  return table;
}

void write_vtk(std::ostream& out, const Mesh& mesh, const CellData& cell_data)
{
  const Index nv = mesh.num_vertices(), nc = mesh.num_cells();
  out << "# vtk DataFile Version 3.0\nequilibra mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (Index v = 0; v < nv; ++v)
    out << format_double(mesh.vertex(v).x()) << ' ' << format_double(mesh.vertex(v).y()) << " 0\n";
  out << "CELLS " << nc << ' ' << 4 * nc << '\n';
  for (Index c = 0; c < nc; ++c)
  {
    const auto& cv = mesh.cell(c);
    out << "3 " << cv[0] << ' ' << cv[1] << ' ' << cv[2] << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (Index c = 0; c < nc; ++c)
    out << "5\n";
  if (cell_data.empty())
    return;
  out << "CELL_DATA " << nc << '\n';
  for (const auto& [name, values] : cell_data)
  {
    if (values.size() != nc)
      throw std::invalid_argument("cell data '" + name + "' has the wrong length");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Index c = 0; c < nc; ++c)
      out << format_double(values[c]) << '\n';
  }
}

} // namespace equilibra
