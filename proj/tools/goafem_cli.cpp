// goafem run <cfg> | figures <fig2|fig3> | verify <suite>
// Exit codes: 0 ok, 1 failed verification or other error, 2 I/O, 3 config, 4 numerical.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "goafem/error.hpp"
#include "goafem/experiments.hpp"
#include "goafem/verify.hpp"

namespace
{

struct Options
{
  int jobs = 1;
  std::string out;
  std::optional<double> theta;
};

int exit_code(std::exception_ptr e)
{
  try
  {
    std::rethrow_exception(e);
  }
  catch (const goafem::IoError &err)
  {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  catch (const goafem::ConfigError &err)
  {
    std::cerr << "config error: " << err.what() << "\n";
    return 3;
  }
  catch (const goafem::NumericalError &err)
  {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 4;
  }
  catch (const std::exception &err)
  {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

int run_suite(goafem::ExperimentSuite suite, const Options &opt)
{
  if (!opt.out.empty())
  {
    suite.output_dir = opt.out;
  }
  if (opt.theta)
  {
    for (auto &r : suite.runs)
    {
      r.theta = *opt.theta;
    }
  }
  suite.assign_outputs();
  suite.validate();
  std::cout << suite.runs.size() << " run(s), output in " << suite.output_dir.string() << "\n";
  const auto results = goafem::run_experiments(suite, opt.jobs, &std::cout);
  std::cout << "\n";
  goafem::print_summary(std::cout, results);
  for (const auto &r : results)
  {
    if (r.error)
    {
      std::cerr << "run " << r.config.name << ": ";
      return exit_code(r.error);
    }
  }
  return 0;
}

int verify(const std::string &suite)
{
  const auto checks = goafem::run_suite(suite);
  int failed = 0;
  for (const auto &c : checks)
  {
    const char *tag = !c.gating ? "INFO" : c.passed ? "PASS" : "FAIL";
    std::cout << "[" << tag << "] " << c.name << ": " << c.detail << "\n";
    if (c.gating && !c.passed)
    {
      failed++;
    }
  }
  std::cout << suite << ": " << checks.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Goal-oriented adaptive FEM experiments"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--jobs,-j", opt.jobs, "Runs executed in parallel")->check(CLI::PositiveNumber);
  app.add_option("--out,-o", opt.out, "Output directory for CSV files");
  app.add_option("--theta", opt.theta, "Override theta for every run");

  std::string config_path, figure, suite;
  auto *run = app.add_subcommand("run", "Run the experiments of a config file");
  run->add_option("config", config_path, "Config file")->required();
  auto *figures = app.add_subcommand("figures", "Reproduce the convergence data of a figure");
  figures->add_option("which", figure, "fig2 or fig3")->required();
  auto *ver = app.add_subcommand("verify", "Run a property suite");
  ver->add_option("suite", suite, "mesh, axioms, marking or goal")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try
  {
    if (*run)
    {
      return run_suite(goafem::load_config(config_path), opt);
    }
    if (*figures)
    {
      return run_suite(goafem::figure_suite(figure), opt);
    }
    return verify(suite);
  }
  catch (...)
  {
    return exit_code(std::current_exception());
  }
}
