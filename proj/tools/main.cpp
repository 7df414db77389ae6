#include "equilibra/benchmarks.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <cstdio>
#include <iostream>

using namespace equilibra;

namespace
{
constexpr int usage_error = 2;

int run(const std::string& config_path, const std::vector<std::string>& overrides)
{
  BenchmarkConfig config = load_config(config_path);
  for (const std::string& item : overrides)
  {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("--set expects key=value, got '" + item + "'");
    apply_config_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
  config.validate();
  const RunRecord record = run_benchmark(config);
  if (config.output_dir.empty())
    write_results_csv(std::cout, record.metadata, record.history);
  else
  {
    const LevelRecord& last = record.history.back();
    std::printf("%zu levels, final n_dof %d, err %.4g, eta %.4g, i_eff %.4f, eoc %.4f\n",
                record.history.size(), last.n_dof, last.err, last.eta, last.i_eff, last.eoc);
  }
  return 0;
}

int timing(const std::string& problem, int k, int m, const std::vector<int>& sizes,
           const std::string& estimator, int repeats, int workers)
{
  if (workers > 0)
    omp_set_num_threads(workers);
  if (estimator != "guaranteed" && estimator != "heuristic")
    throw ConfigurationError("--estimator must be guaranteed or heuristic");
  const auto rows = timing_study(problem, k, m, sizes,
                                 estimator == "guaranteed" ? EstimatorKind::Guaranteed
                                                           : EstimatorKind::Heuristic,
                                 repeats);
  std::printf("size,n_dof,t_prime,t_eqlb,t_tot,ratio\n");
  for (const TimingRow& r : rows)
    std::printf("%d,%d,%.6f,%.6f,%.6f,%.4f\n", r.size, r.n_dof, r.t_prime, r.t_eqlb, r.t_tot,
                r.ratio);
  return 0;
}
} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Adaptive finite elements driven by equilibrated flux and stress estimates"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an adaptive benchmark from a config file");
  run_cmd->add_option("--config", config_path, "key = value config file")->required();
  run_cmd->add_option("--set", overrides, "Override a config entry (key=value)");

  std::string problem = "cook", estimator = "guaranteed";
  int k = 2, m = 2, repeats = 3, workers = 0;
  std::vector<int> sizes;
  CLI::App* timing_cmd = app.add_subcommand("timing", "Relative equilibration cost on fixed meshes");
  timing_cmd->add_option("--problem", problem, "cook or poisson-quadrants")
      ->check(CLI::IsMember({"cook", "poisson-quadrants"}));
  timing_cmd->add_option("--k", k, "Primal degree")->check(CLI::Range(1, 4));
  timing_cmd->add_option("--m", m, "Flux degree")->check(CLI::Range(1, 5));
  timing_cmd->add_option("--sizes", sizes, "Grid sizes")->delimiter(',')->required();
  timing_cmd->add_option("--estimator", estimator, "guaranteed or heuristic");
  timing_cmd->add_option("--repeats", repeats, "Best of this many runs")->check(CLI::PositiveNumber);
  timing_cmd->add_option("--workers", workers, "OpenMP threads (0 keeps the default)");

  CLI11_PARSE(app, argc, argv);
  try
  {
    if (run_cmd->parsed())
      return run(config_path, overrides);
    return timing(problem, k, m, sizes, estimator, repeats, workers);
  }
  catch (const ConfigurationError& e)
  {
    std::cerr << "usage error: " << e.what() << '\n';
    return usage_error;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
