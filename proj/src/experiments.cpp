#include "goafem/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "goafem/error.hpp"
#include "goafem/marking.hpp"

namespace goafem
{

namespace
{

std::string trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
  {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t edit_distance(const std::string &a, const std::string &b)
{
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); j++)
  {
    row[j] = j;
  }
  for (std::size_t i = 1; i <= a.size(); i++)
  {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); j++)
    {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// A run's settings as written, with the line each key came from.
using Settings = std::map<std::string, std::pair<std::string, int>>;

class Parser
{
public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string &msg) const
  {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  double number(const std::string &value, int line, const std::string &key) const
  {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(x))
    {
      fail(line, "'" + key + "' expects a number, got '" + value + "'");
    }
    return x;
  }

  long long integer(const std::string &value, int line, const std::string &key) const
  {
    // 3e5 is accepted as long as it is integral.
    const double x = number(value, line, key);
    if (x != std::floor(x) || std::abs(x) > 9e15)
    {
      fail(line, "'" + key + "' expects an integer, got '" + value + "'");
    }
    return static_cast<long long>(x);
  }

  void apply(RunConfig &c, const std::string &key, const std::string &value, int line) const
  {
    if (key == "problem")
    {
      const auto names = problem_names();
      if (std::find(names.begin(), names.end(), value) == names.end())
      {
        fail(line, with_suggestion("unknown problem '" + value + "'", value, names));
      }
      c.problem = value;
    }
    else if (key == "p" || key == "degree")
    {
      c.degree = static_cast<int>(integer(value, line, key));
    }
    else if (key == "theta")
    {
      c.theta = number(value, line, key);
    }
    else if (key == "strategy")
    {
      const auto keys = strategy_keys();
      if (std::find(keys.begin(), keys.end(), value) == keys.end())
      {
        fail(line, with_suggestion("unknown marking strategy '" + value + "'", value, keys));
      }
      c.strategy = value;
    }
    else if (key == "combination")
    {
      try
      {
        c.combination = parse_combination(value);
      }
      catch (const ConfigError &e)
      {
        fail(line, e.what());
      }
    }
    else if (key == "maxCumulativeDofs")
    {
      c.max_cumulative_dofs = integer(value, line, key);
    }
    else if (key == "maxLevels")
    {
      c.max_levels = static_cast<int>(integer(value, line, key));
    }
    else if (key == "estimatorFloor")
    {
      c.product_floor = number(value, line, key);
    }
    else if (key == "solverTol")
    {
      c.solver.rel_tol = number(value, line, key);
    }
    else
    {
      fail(line, with_suggestion("unknown key '" + key + "'", key, config_keys()));
    }
  }

  static std::string with_suggestion(std::string msg, const std::string &word,
                                     const std::vector<std::string> &valid)
  {
    const std::string best = closest_match(word, valid);
    if (!best.empty())
    {
      msg += " (did you mean '" + best + "'?)";
    }
    msg += "; valid:";
    for (const auto &v : valid)
    {
      msg += " " + v;
    }
    return msg;
  }

  RunConfig build(const std::string &name, const Settings &defaults, const Settings &own,
                  int line) const
  {
    RunConfig c;
    c.name = name;
    Settings merged = defaults;
    for (const auto &[k, v] : own)
    {
      merged[k] = v;
    }
    for (const auto &[k, v] : merged)
    {
      apply(c, k, v.first, v.second);
    }
    try
    {
      c.validate();
    }
    catch (const ConfigError &e)
    {
      fail(line, "run '" + name + "': " + e.what());
    }
    return c;
  }

private:
  std::string source_;
};

bool valid_run_name(const std::string &name)
{
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

}  // namespace

std::vector<std::string> config_keys()
{
  return {"problem",   "p",         "degree",         "theta",     "strategy", "combination",
          "maxCumulativeDofs", "maxLevels", "estimatorFloor", "solverTol", "output"};
}

std::string closest_match(const std::string &word, const std::vector<std::string> &candidates)
{
  std::string best;
  std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
  for (const auto &c : candidates)
  {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d)
    {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void ExperimentSuite::validate() const
{
  std::set<std::string> seen;
  for (const auto &r : runs)
  {
    if (!seen.insert(r.name).second)
    {
      throw ConfigError("duplicate run name '" + r.name + "'");
    }
    r.validate();
  }
}

void ExperimentSuite::assign_outputs()
{
  for (auto &r : runs)
  {
    r.output = output_dir / (file_stem(r.name) + ".csv");
  }
}

ExperimentSuite parse_config(std::istream &in, const std::string &source,
                             const std::string &default_name)
{
  const Parser parser(source);
  ExperimentSuite suite;
  Settings defaults;
  std::vector<std::tuple<std::string, Settings, int>> sections;
  std::set<std::string> names;

  std::string raw;
  int line = 0;
  while (std::getline(in, raw))
  {
    line++;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos)
    {
      s.erase(hash);
    }
    s = trim(s);
    if (s.empty())
    {
      continue;
    }
    if (s.front() == '[')
    {
      if (s.back() != ']')
      {
        parser.fail(line, "unterminated section header");
      }
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (!valid_run_name(name))
      {
        parser.fail(line, "run name '" + name + "' may only contain letters, digits, '_', '-', '.'");
      }
      if (!names.insert(name).second)
      {
        parser.fail(line, "duplicate run name '" + name + "'");
      }
      sections.emplace_back(name, Settings{}, line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
    {
      parser.fail(line, "expected 'key = value'");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
    {
      parser.fail(line, "expected 'key = value'");
    }
    if (key == "output")
    {
      if (!sections.empty())
      {
        parser.fail(line, "'output' names the output directory and is only allowed before the first section");
      }
      suite.output_dir = value;
      continue;
    }
    // Check the key and value right away so the error points at this line.
    RunConfig scratch;
    parser.apply(scratch, key, value, line);
    Settings &target = sections.empty() ? defaults : std::get<1>(sections.back());
    if (target.count(key) || (key == "p" && target.count("degree")) ||
        (key == "degree" && target.count("p")))
    {
      parser.fail(line, "'" + key + "' given twice");
    }
    target[key == "degree" ? "p" : key] = {value, line};
  }
  if (in.bad())
  {
    throw IoError("read failed: " + source);
  }

  if (sections.empty())
  {
    suite.runs.push_back(parser.build(default_name, {}, defaults, 1));
  }
  for (const auto &[name, own, at] : sections)
  {
    suite.runs.push_back(parser.build(name, defaults, own, at));
  }
  suite.assign_outputs();
  return suite;
}

ExperimentSuite load_config(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot read config file " + path.string());
  }
  return parse_config(in, path.string(), path.stem().string());
}

std::vector<std::string> figure_names() { return {"fig2", "fig3"}; }

std::string file_stem(std::string name)
{
  for (char &ch : name)
  {
    if (ch == ':' || ch == '/' || ch == '\\' || ch == ' ')
    {
      ch = '-';
    }
  }
  return name;
}

ExperimentSuite figure_suite(const std::string &which)
{
  ExperimentSuite suite;
  if (which == "fig2")
  {
    for (int p = 1; p <= 3; p++)
    {
      for (const char *s :
           {"maximum-union", "equidist-union", "strategyB:max-sin-exp", "strategyB:pnorm10"})
      {
        RunConfig c;
        c.problem = "ms-linear";
        c.degree = p;
        c.strategy = s;
        c.name = file_stem("fig2_p" + std::to_string(p) + "_" + s);
        suite.runs.push_back(c);
      }
    }
  }
  else if (which == "fig3")
  {
    for (int p = 1; p <= 3; p++)
    {
      for (Combination mode : {Combination::symmetric, Combination::product_form})
      {
        RunConfig c;
        c.problem = "lshape-quadratic";
        c.degree = p;
        c.strategy = "strategyB:mean";
        c.combination = mode;
        c.name = "fig3_p" + std::to_string(p) + "_" + combination_name(mode);
        suite.runs.push_back(c);
      }
    }
  }
  else
  {
    throw ConfigError("unknown figure '" + which + "'; valid: fig2 fig3");
  }
  suite.assign_outputs();
  return suite;
}

std::vector<RunResult> run_experiments(const ExperimentSuite &suite, int jobs, std::ostream *log)
{
  suite.validate();
  if (!suite.output_dir.empty())
  {
    std::error_code ec;
    std::filesystem::create_directories(suite.output_dir, ec);
    if (ec)
    {
      throw IoError("cannot create output directory " + suite.output_dir.string() + ": " +
                    ec.message());
    }
  }

  std::vector<RunResult> results(suite.runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++)
    {
      RunResult &r = results[i];
      r.config = suite.runs[i];
      const auto start = std::chrono::steady_clock::now();
      try
      {
        r.records = run_goafem(r.config);
        if (r.records.size() >= 8)
        {
          r.rate = fit_rate(r.records, 0.5);
        }
      }
      catch (...)
      {
        r.error = std::current_exception();
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (log)
      {
        const std::lock_guard lock(log_mutex);
        *log << (r.error ? "failed " : "done   ") << r.config.name << " ("
             << std::lround(r.seconds * 10) / 10.0 << " s)" << std::endl;
      }
    }
  };

  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(results.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; t++)
  {
    threads.emplace_back(worker);
  }
  worker();
  for (auto &t : threads)
  {
    t.join();
  }
  return results;
}

void print_summary(std::ostream &out, const std::vector<RunResult> &results)
{
  std::size_t width = 4;
  for (const auto &r : results)
  {
    width = std::max(width, r.config.name.size());
  }
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s %6s %10s %14s %8s\n", static_cast<int>(width), "run",
                "level", "cumDofs", "eta*zeta", "alpha");
  out << buf;
  for (const auto &r : results)
  {
    if (r.error || r.records.empty())
    {
      std::string what = "error";
      try
      {
        if (r.error)
        {
          std::rethrow_exception(r.error);
        }
      }
      catch (const std::exception &e)
      {
        what = e.what();
      }
      out << r.config.name << "  FAILED: " << what << "\n";
      continue;
    }
    const auto &last = r.records.back();
    char rate[32] = "-";
    if (r.rate)
    {
      std::snprintf(rate, sizeof rate, "%.3f", *r.rate);
    }
    std::snprintf(buf, sizeof buf, "%-*s %6d %10lld %14.6e %8s\n", static_cast<int>(width),
                  r.config.name.c_str(), last.level, last.cumulative_dofs, last.product, rate);
    out << buf;
  }
}

}  // namespace goafem
