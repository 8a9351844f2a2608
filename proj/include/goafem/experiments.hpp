#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "goafem/driver.hpp"

namespace goafem
{

// Named runs plus the directory their CSVs go to (<dir>/<name>.csv).
struct ExperimentSuite
{
  std::vector<RunConfig> runs;
  std::filesystem::path output_dir = "results";

  // Unique names, valid configs. Throws ConfigError.
  void validate() const;
  // Points every run's output at <dir>/<name>.csv.
  void assign_outputs();
};

// Line-oriented format:
//
//   # comment
//   problem = ms-linear        top-level keys are defaults for every section
//   output = results           output directory (top level only)
//   [fig2_p1]
//   p = 1
//   strategy = maximum-union
//
// Without sections the top-level keys form a single run named `default_name`.
// Errors carry "<source>:<line>:" and, for misspelt keys, the closest valid word.
ExperimentSuite parse_config(std::istream &in, const std::string &source = "<config>",
                             const std::string &default_name = "run");
// Throws IoError naming the path when the file cannot be read.
ExperimentSuite load_config(const std::filesystem::path &path);

std::vector<std::string> config_keys();
std::vector<std::string> figure_names();
// fig2: ms-linear, p = 1..3 x {maximum-union, equidist-union, strategyB:max-sin-exp,
// strategyB:pnorm10}. fig3: lshape-quadratic with strategyB:mean, p = 1..3 x {symmetric,
// product_form}. Throws ConfigError for other names.
ExperimentSuite figure_suite(const std::string &which);
// Run name with characters unsuitable for file names replaced ("strategyB:mean" -> "strategyB-mean").
std::string file_stem(std::string name);

// Closest candidate by edit distance, or "" if nothing is reasonably close.
std::string closest_match(const std::string &word, const std::vector<std::string> &candidates);

struct RunResult
{
  RunConfig config;
  std::vector<ConvergenceRecord> records;
  std::optional<double> rate;  // fit_rate over the trailing half, if enough records
  std::exception_ptr error;
  double seconds = 0.0;
};

// Runs all configs, `jobs` at a time. Each run writes only its own CSV, so the output does
// not depend on `jobs`. Errors are captured per run. Progress lines go to `log` if given.
std::vector<RunResult> run_experiments(const ExperimentSuite &suite, int jobs = 1,
                                       std::ostream *log = nullptr);

// Table of name, levels, final product, fitted rate.
void print_summary(std::ostream &out, const std::vector<RunResult> &results);

}  // namespace goafem
