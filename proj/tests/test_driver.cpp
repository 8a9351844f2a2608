#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "goafem/driver.hpp"
#include "goafem/error.hpp"

using namespace goafem;

namespace
{

std::vector<ConvergenceRecord> synthetic(int n, const std::function<double(double, int)> &product)
{
  std::vector<ConvergenceRecord> records;
  long long cum = 0;
  for (int i = 0; i < n; i++)
  {
    ConvergenceRecord r;
    r.level = i;
    cum += static_cast<long long>(100 * std::pow(1.5, i));
    r.cumulative_dofs = cum;
    r.product = product(static_cast<double>(cum), i);
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("a single level when max_levels = 0")
{
  RunConfig c;
  c.problem = "manufactured";
  c.max_levels = 0;
  const auto records = run_goafem(c);
  REQUIRE(records.size() == 1);
  CHECK(records[0].marked == 0);
  const auto ratios = verify_goal_bound(records, 4.0 / (std::numbers::pi * std::numbers::pi));
  CHECK(std::isfinite(ratios[0]));
  CHECK(ratios[0] > 0.0);
}

TEST_CASE("ms-linear over ten levels")
{
  RunConfig c;
  c.problem = "ms-linear";
  c.max_levels = 9;
  const auto path = std::filesystem::temp_directory_path() / "goafem_driver_test.csv";
  c.output = path;
  const MsLinearProblem problem;
  std::vector<std::size_t> marked_at;
  std::shared_ptr<const Triangulation> previous;
  const auto records = run_goafem(problem, c, [&](const LevelState &s) {
    const auto &mesh = s.solutions.u.space().mesh_ptr();
    if (previous)
    {
      // REFINE consumed exactly the previous MARK output.
      const RefinementMap map = is_refinement_of(*mesh, *previous);
      CHECK(map.num_refined() >= marked_at.back());
      CHECK(map.num_new() > 0);
    }
    previous = mesh;
    marked_at.push_back(s.marked.size());
    CHECK(s.record.product == doctest::Approx(s.indicators.eta.global() * s.indicators.zeta.global()).epsilon(1e-13));
  });
  REQUIRE(records.size() == 10);
  for (std::size_t i = 0; i < records.size(); i++)
  {
    CHECK(records[i].product > 0.0);
    CHECK(std::abs(records[i].product - records[i].eta * records[i].zeta) <=
          1e-13 * records[i].product);
    if (i > 0)
    {
      CHECK(records[i].cumulative_dofs > records[i - 1].cumulative_dofs);
      CHECK(records[i].elements >= records[i - 1].elements);
      CHECK(records[i].dofs > records[i - 1].dofs);
    }
  }
  CHECK(records.back().marked == 0);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "level,nElements,dofs,cumulativeDofs,eta,zeta,estimator,goalValue,nMarked");
  int rows = 0;
  while (std::getline(in, line))
  {
    rows++;
  }
  CHECK(rows == 10);
  std::filesystem::remove(path);
}

TEST_CASE("exact discrete data stops the loop at level 0")
{
  // f = grad u_0 for some u_0 in the initial P1 space: the primal solution is u_0 itself
  // and the primal residual vanishes identically.
  const Triangulation mesh = uniform_refine(MsLinearProblem().initial_mesh(), 2);
  auto space = std::make_shared<const FeSpace>(std::make_shared<const Triangulation>(mesh), 1);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector free(space->num_free_dofs());
  for (int i = 0; i < free.size(); i++)
  {
    free[i] = unif(rng);
  }
  const DiscreteFunction u0(space, extend_vector(*space, free));
  const Bary centre[] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  std::vector<Vec2> grads(mesh.num_elements());
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    grads[t] = eval_element(u0, static_cast<int>(t), centre).gradients[0];
  }
  const MsLinearProblem problem([&](const QuadPoint &qp) { return grads.at(qp.element); },
                                [&](const QuadPoint &qp) { return MsLinearProblem::default_g(mesh.centroid(qp.element)); },
                                mesh);
  RunConfig c;
  c.max_levels = 5;
  const auto records = run_goafem(problem, c);
  REQUIRE(records.size() == 1);
  CHECK(records[0].eta < 1e-12);
  CHECK(records[0].product <= c.product_floor);
}

TEST_CASE("fit_rate")
{
  const auto exact = synthetic(12, [](double x, int) { return 3.0 * std::pow(x, -2.0); });
  CHECK(fit_rate(exact) == doctest::Approx(-2.0).epsilon(1e-10));

  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto noisy = synthetic(20, [&](double x, int) { return std::pow(x, -2.0) * (1.0 + noise(rng)); });
  CHECK(std::abs(fit_rate(noisy, 1.0) + 2.0) <= 0.05);

  const auto flat = synthetic(8, [](double, int) { return 0.5; });
  CHECK(fit_rate(flat) == doctest::Approx(0.0).scale(1e-12));

  CHECK_THROWS_AS(fit_rate(synthetic(5, [](double, int) { return 1.0; })), InvalidArgument);
  auto same_x = synthetic(8, [](double, int) { return 1.0; });
  for (auto &r : same_x)
  {
    r.cumulative_dofs = 100;
  }
  CHECK_THROWS_AS(fit_rate(same_x), InvalidArgument);
}

TEST_CASE("verify_goal_bound")
{
  auto records = synthetic(4, [](double, int) { return 0.1; });
  for (auto &r : records)
  {
    r.goal = 1.0 + 0.01 * r.level;
  }
  const auto ratios = verify_goal_bound(records, 1.02);
  CHECK(ratios[2] == 0.0);
  CHECK(ratios[0] == doctest::Approx(0.2));
  records[1].product = 0.0;
  CHECK_THROWS_AS(verify_goal_bound(records, 1.02), NumericalError);
}

TEST_CASE("run config validation")
{
  RunConfig c;
  c.degree = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.degree = 1;
  c.theta = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.theta = 1.0;
  c.validate();
  c.problem = "heat";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_combination("product-form") == Combination::product_form);
  CHECK(combination_name(Combination::symmetric) == "symmetric");
  CHECK_THROWS_AS(parse_combination("sum"), ConfigError);
}

TEST_CASE("unwritable output")
{
  RunConfig c;
  c.max_levels = 0;
  c.output = "/nonexistent-dir/x.csv";
  CHECK_THROWS_AS(run_goafem(c), IoError);
}
