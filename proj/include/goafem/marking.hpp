#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "goafem/estimators.hpp"
#include "goafem/mesh.hpp"

namespace goafem
{

// Weighting function of the combined bulk criterion theta <= W(x, y).
struct WeightFunction
{
  std::string name;
  std::function<double(double, double)> fn;
};

// Built-in W: "mean" (x+y)/2, "max-sin-exp" max{sin(pi x/2), 2^y - 1},
// "pnorm10" (x^10 + y^10)^{1/10} / 2^{1/10}. Throws ConfigError for unknown names.
WeightFunction builtin_weight(std::string_view name);
std::vector<std::string> builtin_weight_names();

// Checks W(1,1) = 1 and returns C_W = max W(x,y)/max{x,y} over a 21x21 grid of [0,1]^2
// (origin excluded). Throws InvalidArgument if W(1,1) != 1.
double weight_constant(const WeightFunction &w);

// Checks V(0,0) = 0 and continuity at the origin via V(1e-12, 1e-12) < 1e-3.
void check_origin_continuity(const std::function<double(double, double)> &v);

enum class MarkRecipe
{
  doerfler_smaller,  // Doerfler on eta and zeta, smaller set
  doerfler_union,
  maximum_union,
  equidist_union,
  rho_doerfler,      // Doerfler on the weighted indicator rho
  strategy_a,        // prefix growth until the product criterion with V holds
  strategy_b,        // prefix growth until theta <= W(...)
};

struct MarkRequest
{
  MarkRecipe recipe = MarkRecipe::doerfler_smaller;
  double theta = 0.5;
  WeightFunction weight;                        // strategy_b
  std::function<double(double, double)> v_fn;  // strategy_a
};

// Parses `doerfler-smaller`, `doerfler-union`, `maximum-union`, `equidist-union`,
// `rho-doerfler`, `strategyB:<W>`. Throws ConfigError listing the valid keys.
MarkRequest parse_strategy(std::string_view key, double theta);
std::vector<std::string> strategy_keys();

MarkedSet mark_doerfler(const IndicatorField &xi, double theta);
MarkedSet mark_maximum(const IndicatorField &xi, double theta);
MarkedSet mark_equidistribution(const IndicatorField &xi, double theta);
MarkedSet mark_general(const IndicatorField &xi, const std::function<double(double)> &m_fn);
MarkedSet mark_goafem(const IndicatorField &eta, const IndicatorField &zeta,
                      const MarkRequest &request);

MarkedSet set_union(const MarkedSet &a, const MarkedSet &b, std::size_t num_elements);

// Post-hoc checks of the defining inequalities, evaluated with the IndicatorField
// aggregates.
bool satisfies_doerfler(const IndicatorField &xi, const MarkedSet &m, double theta);
bool satisfies_maximum(const IndicatorField &xi, const MarkedSet &m, double theta);
bool satisfies_equidistribution(const IndicatorField &xi, const MarkedSet &m, double theta);
bool satisfies_general(const IndicatorField &xi, const MarkedSet &m,
                       const std::function<double(double)> &m_fn);
bool satisfies_strategy_a(const IndicatorField &eta, const IndicatorField &zeta,
                          const MarkedSet &m, const std::function<double(double, double)> &v_fn);
bool satisfies_strategy_b(const IndicatorField &eta, const IndicatorField &zeta,
                          const MarkedSet &m, double theta, const WeightFunction &w);
// Whatever the request's recipe defines.
bool satisfies_request(const IndicatorField &eta, const IndicatorField &zeta, const MarkedSet &m,
                       const MarkRequest &request);

}  // namespace goafem
