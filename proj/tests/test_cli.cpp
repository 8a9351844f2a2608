#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  int code = -1;
  std::string output;  // stdout and stderr
};

Outcome run(const std::string &args)
{
  const fs::path log = fs::temp_directory_path() / "goafem_cli_test.log";
  const std::string cmd = std::string(GOAFEM_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream s;
  s << in.rdbuf();
  o.output = s.str();
  return o;
}

fs::path write_file(const std::string &name, const std::string &text)
{
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::size_t rows(const fs::path &csv)
{
  std::ifstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
  {
    n++;
  }
  return n == 0 ? 0 : n - 1;
}

}  // namespace

TEST_CASE("missing config file exits with 2 and names the path")
{
  const Outcome o = run("run /no/such/config.cfg");
  CHECK(o.code == 2);
  CHECK(o.output.find("/no/such/config.cfg") != std::string::npos);
}

TEST_CASE("minimal config produces a CSV with at least five rows")
{
  const fs::path out = fs::temp_directory_path() / "goafem_cli_out";
  fs::remove_all(out);
  const fs::path cfg = write_file("goafem_minimal.cfg",
                                  "problem = manufactured\np = 1\ntheta = 0.5\n"
                                  "strategy = doerfler-smaller\nmaxCumulativeDofs = 20000\n");
  const Outcome o = run("--out " + out.string() + " run " + cfg.string());
  CHECK(o.code == 0);
  CHECK(rows(out / "goafem_minimal.csv") >= 5);
  CHECK(o.output.find("goafem_minimal") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("unknown strategy exits with 3 and lists the valid keys")
{
  const fs::path cfg = write_file("goafem_bad.cfg", "problem = manufactured\nstrategy = dorfler\n");
  const Outcome o = run("run " + cfg.string());
  CHECK(o.code == 3);
  CHECK(o.output.find(":2:") != std::string::npos);
  CHECK(o.output.find("doerfler-smaller") != std::string::npos);
  CHECK(o.output.find("strategyB:max-sin-exp") != std::string::npos);
}

TEST_CASE("theta override is validated")
{
  const fs::path cfg = write_file("goafem_theta.cfg", "problem = manufactured\nmaxLevels = 1\n");
  CHECK(run("--theta 1.5 run " + cfg.string()).code == 3);
}

TEST_CASE("usage errors")
{
  CHECK(run("").code != 0);
  CHECK(run("figures fig9").code == 3);
  CHECK(run("verify nothing").code == 3);
  CHECK(run("--help").code == 0);
}

TEST_CASE("verify mesh passes")
{
  const Outcome o = run("verify mesh");
  CHECK(o.code == 0);
  CHECK(o.output.find("[PASS]") != std::string::npos);
  CHECK(o.output.find("[FAIL]") == std::string::npos);
}
