#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "goafem/error.hpp"
#include "goafem/experiments.hpp"

using namespace goafem;

namespace
{

ExperimentSuite parse(const std::string &text)
{
  std::istringstream in(text);
  return parse_config(in, "test.cfg", "single");
}

std::string error_of(const std::string &text)
{
  try
  {
    parse(text);
  }
  catch (const ConfigError &e)
  {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("single run from top-level keys")
{
  const auto suite = parse("# minimal\nproblem = manufactured\np = 1\ntheta = 0.5\n"
                           "strategy = doerfler-smaller\nmaxCumulativeDofs = 2e4\n");
  REQUIRE(suite.runs.size() == 1);
  const RunConfig &c = suite.runs[0];
  CHECK(c.name == "single");
  CHECK(c.problem == "manufactured");
  CHECK(c.max_cumulative_dofs == 20000);
  CHECK(c.output == std::filesystem::path("results") / "single.csv");
}

TEST_CASE("sections inherit top-level defaults")
{
  const auto suite = parse("problem = lshape-quadratic\noutput = out\nstrategy = strategyB:mean\n"
                           "[a]\np = 2\ncombination = symmetric\n"
                           "[b]\ndegree = 3\nproblem = ms-linear   # override\nsolverTol = 1e-9\n");
  REQUIRE(suite.runs.size() == 2);
  CHECK(suite.runs[0].name == "a");
  CHECK(suite.runs[0].problem == "lshape-quadratic");
  CHECK(suite.runs[0].degree == 2);
  CHECK(suite.runs[0].combination == Combination::symmetric);
  CHECK(suite.runs[1].problem == "ms-linear");
  CHECK(suite.runs[1].degree == 3);
  CHECK(suite.runs[1].strategy == "strategyB:mean");
  CHECK(suite.runs[1].solver.rel_tol == 1e-9);
  CHECK(suite.runs[1].output == std::filesystem::path("out") / "b.csv");
}

TEST_CASE("config errors carry line numbers and suggestions")
{
  std::string e = error_of("problem = manufactured\nstratgy = maximum-union\n");
  CHECK(e.find("test.cfg:2:") != std::string::npos);
  CHECK(e.find("did you mean 'strategy'") != std::string::npos);

  e = error_of("strategy = maximum-unoin\n");
  CHECK(e.find("test.cfg:1:") != std::string::npos);
  CHECK(e.find("did you mean 'maximum-union'") != std::string::npos);
  CHECK(e.find("strategyB:pnorm10") != std::string::npos);

  e = error_of("problem = ms-linaer\n");
  CHECK(e.find("did you mean 'ms-linear'") != std::string::npos);

  CHECK(error_of("[x]\n[x]\n").find("test.cfg:2: duplicate") != std::string::npos);
  CHECK(error_of("p = two\n").find("test.cfg:1:") != std::string::npos);
  CHECK(error_of("p = 1.5\n").find("integer") != std::string::npos);
  CHECK(error_of("just words\n").find("key = value") != std::string::npos);
  CHECK(error_of("[a\n").find("section") != std::string::npos);
  CHECK(error_of("p = 1\np = 2\n").find("twice") != std::string::npos);
  CHECK(error_of("[a]\noutput = x\n").find("test.cfg:2:") != std::string::npos);
  CHECK(error_of("[a]\np = 5\n").find("test.cfg:1: run 'a'") != std::string::npos);
  CHECK(error_of("theta = 2\n").find("theta") != std::string::npos);
  CHECK(error_of("") == "");
}

TEST_CASE("missing config file")
{
  try
  {
    load_config("/no/such/file.cfg");
    FAIL("expected IoError");
  }
  catch (const IoError &e)
  {
    CHECK(std::string(e.what()).find("/no/such/file.cfg") != std::string::npos);
  }
}

TEST_CASE("figure suites")
{
  const auto fig2 = figure_suite("fig2");
  CHECK(fig2.runs.size() == 12);
  fig2.validate();
  CHECK(fig2.runs[2].name == "fig2_p1_strategyB-max-sin-exp");
  CHECK(fig2.runs[2].strategy == "strategyB:max-sin-exp");
  CHECK(fig2.runs[11].degree == 3);
  const auto fig3 = figure_suite("fig3");
  CHECK(fig3.runs.size() == 6);
  CHECK(fig3.runs[1].name == "fig3_p1_product_form");
  CHECK(fig3.runs[1].combination == Combination::product_form);
  CHECK_THROWS_AS(figure_suite("fig4"), ConfigError);
  CHECK(file_stem("a:b c") == "a-b-c");
  CHECK(closest_match("zzzzzz", {"mesh", "goal"}).empty());
}

TEST_CASE("parallel runs write the same files as sequential runs")
{
  const auto base = std::filesystem::temp_directory_path() / "goafem_experiments_test";
  std::filesystem::remove_all(base);
  auto suite = parse("maxCumulativeDofs = 5000\n"
                     "[m1]\nproblem = manufactured\n"
                     "[m2]\nproblem = manufactured\np = 2\nstrategy = maximum-union\n"
                     "[ms]\nproblem = ms-linear\nstrategy = strategyB:pnorm10\n");
  suite.output_dir = base / "seq";
  suite.assign_outputs();
  const auto seq = run_experiments(suite, 1);
  suite.output_dir = base / "par";
  suite.assign_outputs();
  const auto par = run_experiments(suite, 3);
  REQUIRE(seq.size() == 3);
  for (std::size_t i = 0; i < seq.size(); i++)
  {
    CHECK_FALSE(seq[i].error);
    CHECK_FALSE(par[i].error);
    const std::string a = slurp(base / "seq" / (seq[i].config.name + ".csv"));
    CHECK(a.size() > 100);
    CHECK(a == slurp(base / "par" / (seq[i].config.name + ".csv")));
  }
  std::ostringstream table;
  print_summary(table, seq);
  CHECK(table.str().find("m2") != std::string::npos);
  std::filesystem::remove_all(base);
}

TEST_CASE("run errors are captured per run")
{
  ExperimentSuite suite;
  RunConfig bad;
  bad.name = "bad";
  bad.max_levels = 0;
  bad.output = "/nonexistent-dir/bad.csv";
  suite.runs.push_back(bad);
  suite.output_dir.clear();
  const auto results = run_experiments(suite, 1);
  REQUIRE(results.size() == 1);
  CHECK(results[0].error);
  std::ostringstream table;
  print_summary(table, results);
  CHECK(table.str().find("FAILED") != std::string::npos);
}
