#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace goafem
{

struct Check
{
  std::string name;
  bool passed = false;
  std::string detail;  // measured constants
  bool gating = true;  // false: reported only, never fails a suite
};

struct VerifyOptions
{
  std::uint64_t seed = 20240607;
  int refine_calls = 500;
  int random_fields = 100;
  int small_fields = 200;      // fields with <= 12 elements for the minimality search
  int reduction_meshes = 20;
  int stability_levels = 8;
  int efficiency_trials = 20;
  int goal_levels = 10;
};

std::vector<Check> verify_mesh(const VerifyOptions &options = {});
std::vector<Check> verify_marking(const VerifyOptions &options = {});
std::vector<Check> verify_axioms(const VerifyOptions &options = {});
std::vector<Check> verify_goal(const VerifyOptions &options = {});

std::vector<std::string> suite_names();
// Throws ConfigError for an unknown suite.
std::vector<Check> run_suite(const std::string &name, const VerifyOptions &options = {});

}  // namespace goafem
