#include "goafem/driver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "goafem/error.hpp"
#include "goafem/marking.hpp"

namespace goafem
{

Combination parse_combination(const std::string &key)
{
  if (key == "separate")
  {
    return Combination::separate;
  }
  if (key == "product_form" || key == "product-form")
  {
    return Combination::product_form;
  }
  if (key == "symmetric")
  {
    return Combination::symmetric;
  }
  throw ConfigError("unknown combination '" + key + "'; valid: separate product_form symmetric");
}

std::string combination_name(Combination mode)
{
  switch (mode)
  {
  case Combination::separate:
    return "separate";
  case Combination::product_form:
    return "product_form";
  case Combination::symmetric:
    return "symmetric";
  }
  return "?";
}

void RunConfig::validate() const
{
  if (degree < 1 || degree > 3)
  {
    throw ConfigError("p must be 1, 2 or 3");
  }
  parse_strategy(strategy, theta);
  problem_by_name(problem);
  if (max_cumulative_dofs <= 0 || max_levels < 0 || !(product_floor >= 0.0))
  {
    throw ConfigError("stop criteria must be positive");
  }
  if (!(solver.rel_tol > 0.0 && solver.rel_tol < 1.0))
  {
    throw ConfigError("solver tolerance must lie in (0, 1)");
  }
}

void write_csv_header(std::ostream &out)
{
  out << "level,nElements,dofs,cumulativeDofs,eta,zeta,estimator,goalValue,nMarked\n";
}

void write_csv_row(std::ostream &out, const ConvergenceRecord &r)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%zu,%lld,%lld,%.17g,%.17g,%.17g,%.17g,%zu\n", r.level,
                r.elements, r.dofs, r.cumulative_dofs, r.eta, r.zeta, r.product, r.goal, r.marked);
  out << buf;
}

std::vector<ConvergenceRecord> run_goafem(const RunConfig &config, const LevelCallback &callback)
{
  config.validate();
  auto problem = problem_by_name(config.problem);
  if (config.combination)
  {
    problem->set_combination(*config.combination);
  }
  return run_goafem(*problem, config, callback);
}

std::vector<ConvergenceRecord> run_goafem(const GoalProblem &problem, const RunConfig &config,
                                          const LevelCallback &callback)
{
  if (config.degree < 1 || config.degree > 3)
  {
    throw ConfigError("p must be 1, 2 or 3");
  }
  const MarkRequest request = parse_strategy(config.strategy, config.theta);

  std::ofstream csv;
  if (!config.output.empty())
  {
    csv.open(config.output);
    if (!csv)
    {
      throw IoError("cannot write " + config.output.string());
    }
    write_csv_header(csv);
    csv.flush();
  }

  std::vector<ConvergenceRecord> records;
  auto mesh = std::make_shared<const Triangulation>(problem.initial_mesh());
  long long cumulative = 0;
  for (int level = 0;; level++)
  {
    auto space = std::make_shared<const FeSpace>(mesh, config.degree);
    const DiscreteSolutions sol = problem.solve(space, config.solver);
    const CombinedIndicators ind = problem.indicators(sol);

    ConvergenceRecord r;
    r.level = level;
    r.elements = mesh->num_elements();
    r.dofs = space->num_free_dofs();
    cumulative += r.dofs;
    r.cumulative_dofs = cumulative;
    r.eta = ind.eta.global();
    r.zeta = ind.zeta.global();
    r.product = r.eta * r.zeta;
    r.goal = problem.goal(sol.u);
    r.primal = sol.primal;
    r.dual = sol.dual;
    r.newton_iterations = sol.newton_iterations;

    const bool stop = r.product <= config.product_floor || level >= config.max_levels ||
                      cumulative >= config.max_cumulative_dofs;
    MarkedSet marked;
    if (!stop)
    {
      marked = mark_goafem(ind.eta, ind.zeta, request);
    }
    r.marked = marked.size();
    records.push_back(r);
    if (csv.is_open())
    {
      write_csv_row(csv, r);
      csv.flush();
      if (!csv)
      {
        throw IoError("write failed: " + config.output.string());
      }
    }
    if (callback)
    {
      callback(LevelState{records.back(), sol, ind, marked});
    }
    if (stop || marked.empty())
    {
      break;
    }
    mesh = std::make_shared<const Triangulation>(refine_nvb(*mesh, marked));
  }
  return records;
}

double fit_rate(std::span<const ConvergenceRecord> records, double window)
{
  if (!(window > 0.0 && window <= 1.0))
  {
    throw InvalidArgument("fit_rate: window must lie in (0, 1]");
  }
  const std::size_t n = records.size();
  const std::size_t m = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  if (m < 4)
  {
    throw InvalidArgument("fit_rate: fewer than 4 records in the window");
  }
  const auto tail = records.subspan(n - m);
  double sx = 0.0, sy = 0.0;
  for (const auto &r : tail)
  {
    if (!(r.product > 0.0) || r.cumulative_dofs <= 0)
    {
      throw InvalidArgument("fit_rate: products and cumulative DOFs must be positive");
    }
    sx += std::log(static_cast<double>(r.cumulative_dofs));
    sy += std::log(r.product);
  }
  const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (const auto &r : tail)
  {
    const double dx = std::log(static_cast<double>(r.cumulative_dofs)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r.product) - my);
  }
  if (sxx == 0.0)
  {
    throw InvalidArgument("fit_rate: degenerate window (all abscissae equal)");
  }
  return sxy / sxx;
}

std::vector<double> verify_goal_bound(std::span<const ConvergenceRecord> records,
                                      double exact_goal)
{
  std::vector<double> ratios;
  for (const auto &r : records)
  {
    const double err = std::abs(exact_goal - r.goal);
    if (r.product == 0.0)
    {
      if (err != 0.0)
      {
        throw NumericalError("goal error bound violated: estimator vanishes at level " +
                             std::to_string(r.level) + " but the goal error is " +
                             std::to_string(err));
      }
      ratios.push_back(0.0);
      continue;
    }
    ratios.push_back(err / r.product);
  }
  return ratios;
}

}  // namespace goafem
