#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "goafem/problems.hpp"

namespace goafem
{

struct RunConfig
{
  std::string name = "run";
  std::string problem = "manufactured";
  int degree = 1;
  double theta = 0.5;
  std::string strategy = "doerfler-smaller";
  std::optional<Combination> combination;  // empty: the problem's default
  long long max_cumulative_dofs = 300000;
  int max_levels = 100;
  double product_floor = 1e-12;
  std::filesystem::path output;  // CSV path; empty: no file
  SolverOptions solver;

  // Throws ConfigError on an invalid setting or unknown key.
  void validate() const;
};

struct ConvergenceRecord
{
  int level = 0;
  std::size_t elements = 0;
  long long dofs = 0;  // dim of the discrete space (free DOFs)
  long long cumulative_dofs = 0;
  double eta = 0.0;
  double zeta = 0.0;
  double product = 0.0;
  double goal = 0.0;
  std::size_t marked = 0;
  SolveReport primal;
  SolveReport dual;
  int newton_iterations = 0;
};

// Everything the loop saw on one level; handed to the level callback.
struct LevelState
{
  const ConvergenceRecord &record;
  const DiscreteSolutions &solutions;
  const CombinedIndicators &indicators;
  const MarkedSet &marked;  // empty on the final level
};

using LevelCallback = std::function<void(const LevelState &)>;

Combination parse_combination(const std::string &key);
std::string combination_name(Combination mode);

// SOLVE, ESTIMATE, MARK, REFINE until the estimator product drops to the floor or a stop
// criterion triggers. One record per ESTIMATE step, the last one included.
std::vector<ConvergenceRecord> run_goafem(const RunConfig &config, const LevelCallback &callback = {});
std::vector<ConvergenceRecord> run_goafem(const GoalProblem &problem, const RunConfig &config,
                                          const LevelCallback &callback = {});

void write_csv_header(std::ostream &out);
void write_csv_row(std::ostream &out, const ConvergenceRecord &r);

// Least-squares slope of log(eta*zeta) against log(cumulative DOFs) over the trailing
// fraction of the records.
double fit_rate(std::span<const ConvergenceRecord> records, double window = 0.5);

// |G_exact - G_l| / (eta_l zeta_l) per level. Throws NumericalError for a vanishing
// estimator with nonzero goal error.
std::vector<double> verify_goal_bound(std::span<const ConvergenceRecord> records,
                                      double exact_goal);

}  // namespace goafem
