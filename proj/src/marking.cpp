#include "goafem/marking.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "goafem/error.hpp"

namespace goafem
{

WeightFunction builtin_weight(std::string_view name)
{
  if (name == "mean")
  {
    return {"mean", [](double x, double y) { return 0.5 * (x + y); }};
  }
  if (name == "max-sin-exp")
  {
    return {"max-sin-exp", [](double x, double y) {
              return std::max(std::sin(std::numbers::pi * x / 2.0), std::exp2(y) - 1.0);
            }};
  }
  if (name == "pnorm10")
  {
    return {"pnorm10", [](double x, double y) {
              constexpr double q = 10.0;
              return std::pow(std::pow(x, q) + std::pow(y, q), 1.0 / q) / std::pow(2.0, 1.0 / q);
            }};
  }
  std::string msg = "unknown weight function '" + std::string(name) + "'; valid:";
  for (const auto &n : builtin_weight_names())
  {
    msg += " " + n;
  }
  throw ConfigError(msg);
}

std::vector<std::string> builtin_weight_names() { return {"mean", "max-sin-exp", "pnorm10"}; }

double weight_constant(const WeightFunction &w)
{
  if (std::abs(w.fn(1.0, 1.0) - 1.0) > 1e-14)
  {
    throw InvalidArgument("weight function " + w.name + " violates W(1,1) = 1");
  }
  double cw = 0.0;
  for (int i = 0; i <= 20; i++)
  {
    for (int j = 0; j <= 20; j++)
    {
      if (i == 0 && j == 0)
      {
        continue;
      }
      const double x = i / 20.0, y = j / 20.0;
      cw = std::max(cw, w.fn(x, y) / std::max(x, y));
    }
  }
  return cw;
}

void check_origin_continuity(const std::function<double(double, double)> &v)
{
  if (v(0.0, 0.0) != 0.0 || !(v(1e-12, 1e-12) < 1e-3))
  {
    throw InvalidArgument("V must satisfy V(0,0) = 0 and be continuous at the origin");
  }
}

std::vector<std::string> strategy_keys()
{
  std::vector<std::string> keys{"doerfler-smaller", "doerfler-union", "maximum-union",
                                "equidist-union", "rho-doerfler"};
  for (const auto &w : builtin_weight_names())
  {
    keys.push_back("strategyB:" + w);
  }
  return keys;
}

namespace
{

[[noreturn]] void unknown_strategy(std::string_view key)
{
  std::string msg = "unknown marking strategy '" + std::string(key) + "'; valid keys:";
  for (const auto &k : strategy_keys())
  {
    msg += " " + k;
  }
  throw ConfigError(msg);
}

}  // namespace

MarkRequest parse_strategy(std::string_view key, double theta)
{
  if (!(theta > 0.0 && theta <= 1.0))
  {
    throw ConfigError("theta must lie in (0, 1]");
  }
  MarkRequest req;
  req.theta = theta;
  if (key == "doerfler-smaller")
  {
    req.recipe = MarkRecipe::doerfler_smaller;
  }
  else if (key == "doerfler-union")
  {
    req.recipe = MarkRecipe::doerfler_union;
  }
  else if (key == "maximum-union")
  {
    req.recipe = MarkRecipe::maximum_union;
  }
  else if (key == "equidist-union")
  {
    req.recipe = MarkRecipe::equidist_union;
  }
  else if (key == "rho-doerfler")
  {
    req.recipe = MarkRecipe::rho_doerfler;
  }
  else if (key.starts_with("strategyB:"))
  {
    const auto names = builtin_weight_names();
    const std::string_view w = key.substr(10);
    if (std::find(names.begin(), names.end(), w) == names.end())
    {
      unknown_strategy(key);
    }
    req.recipe = MarkRecipe::strategy_b;
    req.weight = builtin_weight(w);
    weight_constant(req.weight);
  }
  else
  {
    unknown_strategy(key);
  }
  return req;
}

namespace
{

// Element indices by descending score, ties by ascending index.
std::vector<int> descending(std::span<const double> score)
{
  std::vector<int> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  return order;
}

MarkedSet prefix_set(const std::vector<int> &order, std::size_t k, std::size_t n)
{
  return MarkedSet(std::vector<int>(order.begin(), order.begin() + k), n);
}

// Smallest prefix length k >= k0 whose set passes `ok`, then shrunk while the shorter
// prefix still passes. `ok` is the canonical post-hoc check.
template <typename Ok>
std::size_t settle_prefix(const std::vector<int> &order, std::size_t k0, Ok &&ok)
{
  const std::size_t n = order.size();
  std::size_t k = std::min(k0, n);
  while (k < n && !ok(prefix_set(order, k, n)))
  {
    k++;
  }
  while (k > 0 && ok(prefix_set(order, k - 1, n)))
  {
    k--;
  }
  return k;
}

}  // namespace

MarkedSet mark_doerfler(const IndicatorField &xi, double theta)
{
  const std::size_t n = xi.size();
  if (xi.global_squared() == 0.0)
  {
    return {};
  }
  const std::vector<int> order = descending(xi.squared());
  const long double target = static_cast<long double>(theta) * xi.global_squared();
  long double sum = 0.0L;
  std::size_t k = 0;
  while (k < n && sum < target)
  {
    sum += xi.squared(order[k]);
    k++;
  }
  k = settle_prefix(order, k, [&](const MarkedSet &m) { return satisfies_doerfler(xi, m, theta); });
  return prefix_set(order, k, n);
}

MarkedSet mark_maximum(const IndicatorField &xi, double theta)
{
  double max = 0.0;
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    max = std::max(max, xi.value(static_cast<int>(t)));
  }
  if (max == 0.0)
  {
    return {};
  }
  const double threshold = (1.0 - theta) * max;
  std::vector<int> m;
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    if (xi.value(static_cast<int>(t)) >= threshold)
    {
      m.push_back(static_cast<int>(t));
    }
  }
  return MarkedSet(std::move(m), xi.size());
}

MarkedSet mark_equidistribution(const IndicatorField &xi, double theta)
{
  if (xi.global_squared() == 0.0)
  {
    return {};
  }
  const double threshold = (1.0 - theta) * xi.global() / static_cast<double>(xi.size());
  std::vector<int> m;
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    const double v = xi.value(static_cast<int>(t));
    if (v > 0.0 && v >= threshold)
    {
      m.push_back(static_cast<int>(t));
    }
  }
  return MarkedSet(std::move(m), xi.size());
}

MarkedSet mark_general(const IndicatorField &xi, const std::function<double(double)> &m_fn)
{
  const std::size_t n = xi.size();
  const std::vector<int> order = descending(xi.squared());
  long double sum = 0.0L;
  std::size_t k = 0;
  for (; k < n; k++)
  {
    if (xi.value(order[k]) <= m_fn(std::sqrt(static_cast<double>(sum))))
    {
      break;
    }
    sum += xi.squared(order[k]);
  }
  k = settle_prefix(order, k, [&](const MarkedSet &m) { return satisfies_general(xi, m, m_fn); });
  return prefix_set(order, k, n);
}

MarkedSet set_union(const MarkedSet &a, const MarkedSet &b, std::size_t num_elements)
{
  std::vector<int> u;
  std::set_union(a.elements().begin(), a.elements().end(), b.elements().begin(),
                 b.elements().end(), std::back_inserter(u));
  return MarkedSet(std::move(u), num_elements);
}

namespace
{

MarkedSet mark_strategy_a(const IndicatorField &eta, const IndicatorField &zeta,
                          const std::function<double(double, double)> &v_fn)
{
  const std::size_t n = eta.size();
  if (eta.global_squared() == 0.0 || zeta.global_squared() == 0.0)
  {
    return {};
  }
  std::vector<double> score(n);
  for (std::size_t t = 0; t < n; t++)
  {
    const int ti = static_cast<int>(t);
    score[t] = std::max(eta.squared(ti) / eta.global_squared(),
                        zeta.squared(ti) / zeta.global_squared());
  }
  const std::vector<int> order = descending(score);
  // Suffix maxima of the unmarked indicators.
  std::vector<double> eta_rest(n + 1, 0.0), zeta_rest(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;)
  {
    eta_rest[k] = std::max(eta_rest[k + 1], eta.value(order[k]));
    zeta_rest[k] = std::max(zeta_rest[k + 1], zeta.value(order[k]));
  }
  long double se = 0.0L, sz = 0.0L;
  std::size_t k = 0;
  for (; k < n; k++)
  {
    if (eta_rest[k] * zeta_rest[k] <=
        v_fn(std::sqrt(static_cast<double>(se)), std::sqrt(static_cast<double>(sz))))
    {
      break;
    }
    se += eta.squared(order[k]);
    sz += zeta.squared(order[k]);
  }
  k = settle_prefix(order, k, [&](const MarkedSet &m) {
    return satisfies_strategy_a(eta, zeta, m, v_fn);
  });
  return prefix_set(order, k, n);
}

MarkedSet mark_strategy_b(const IndicatorField &eta, const IndicatorField &zeta, double theta,
                          const WeightFunction &w)
{
  const std::size_t n = eta.size();
  if (eta.global_squared() == 0.0 || zeta.global_squared() == 0.0)
  {
    throw InvalidArgument("strategy B requires nonzero global estimators");
  }
  const double e2 = eta.global_squared(), z2 = zeta.global_squared();
  std::vector<double> score(n);
  for (std::size_t t = 0; t < n; t++)
  {
    const int ti = static_cast<int>(t);
    score[t] = std::max(eta.squared(ti) / e2, zeta.squared(ti) / z2);
  }
  const std::vector<int> order = descending(score);
  long double se = 0.0L, sz = 0.0L;
  std::size_t k = 0;
  while (k < n && !(theta <= w.fn(static_cast<double>(se / e2), static_cast<double>(sz / z2))))
  {
    se += eta.squared(order[k]);
    sz += zeta.squared(order[k]);
    k++;
  }
  // Prefix growth is not monotone in W in general; only extend, never shrink.
  const auto ok = [&](const MarkedSet &m) {
    return satisfies_strategy_b(eta, zeta, m, theta, w);
  };
  while (k < n && !ok(prefix_set(order, k, n)))
  {
    k++;
  }
  return prefix_set(order, k, n);
}

}  // namespace

MarkedSet mark_goafem(const IndicatorField &eta, const IndicatorField &zeta,
                      const MarkRequest &request)
{
  if (eta.size() != zeta.size())
  {
    throw InvalidArgument("mark_goafem: indicator fields live on different meshes");
  }
  const double theta = request.theta;
  const std::size_t n = eta.size();
  switch (request.recipe)
  {
  case MarkRecipe::doerfler_smaller:
  {
    MarkedSet a = mark_doerfler(eta, theta);
    MarkedSet b = mark_doerfler(zeta, theta);
    return b.size() < a.size() ? b : a;
  }
  case MarkRecipe::doerfler_union:
    return set_union(mark_doerfler(eta, theta), mark_doerfler(zeta, theta), n);
  case MarkRecipe::maximum_union:
    return set_union(mark_maximum(eta, theta), mark_maximum(zeta, theta), n);
  case MarkRecipe::equidist_union:
    return set_union(mark_equidistribution(eta, theta), mark_equidistribution(zeta, theta), n);
  case MarkRecipe::rho_doerfler:
    return mark_doerfler(weighted_indicator(eta, zeta), theta);
  case MarkRecipe::strategy_a:
    check_origin_continuity(request.v_fn);
    return mark_strategy_a(eta, zeta, request.v_fn);
  case MarkRecipe::strategy_b:
    return mark_strategy_b(eta, zeta, theta, request.weight);
  }
  throw InvalidArgument("mark_goafem: unknown recipe");
}

bool satisfies_doerfler(const IndicatorField &xi, const MarkedSet &m, double theta)
{
  return theta * xi.global_squared() <= xi.aggregate_squared(m.elements());
}

namespace
{

// M equals {T : xi(T) >= threshold} (restricted to nonzero entries if requested).
bool is_threshold_set(const IndicatorField &xi, const MarkedSet &m, double threshold,
                      bool nonzero_only)
{
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    const double v = xi.value(static_cast<int>(t));
    const bool in = v >= threshold && (!nonzero_only || v > 0.0);
    if (in != m.contains(static_cast<int>(t)))
    {
      return false;
    }
  }
  return true;
}

double max_value(const IndicatorField &xi)
{
  double max = 0.0;
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    max = std::max(max, xi.value(static_cast<int>(t)));
  }
  return max;
}

double max_unmarked(const IndicatorField &xi, const MarkedSet &m)
{
  double max = 0.0;
  for (std::size_t t = 0; t < xi.size(); t++)
  {
    if (!m.contains(static_cast<int>(t)))
    {
      max = std::max(max, xi.value(static_cast<int>(t)));
    }
  }
  return max;
}

// M is exactly the set of elements at or above one of the two thresholds. Fields that
// vanish identically contribute nothing.
bool is_union_of(const IndicatorField &eta, const IndicatorField &zeta, const MarkedSet &m,
                 double eta_threshold, double zeta_threshold, bool nonzero_only)
{
  for (std::size_t t = 0; t < eta.size(); t++)
  {
    const int ti = static_cast<int>(t);
    const double e = eta.value(ti), z = zeta.value(ti);
    const bool in = ((e > 0.0 || !nonzero_only) && e >= eta_threshold && eta.global_squared() > 0.0) ||
                    ((z > 0.0 || !nonzero_only) && z >= zeta_threshold && zeta.global_squared() > 0.0);
    if (in != m.contains(ti))
    {
      return false;
    }
  }
  return true;
}

}  // namespace

bool satisfies_maximum(const IndicatorField &xi, const MarkedSet &m, double theta)
{
  const double max = max_value(xi);
  if (max == 0.0)
  {
    return m.empty();
  }
  return is_threshold_set(xi, m, (1.0 - theta) * max, false);
}

bool satisfies_equidistribution(const IndicatorField &xi, const MarkedSet &m, double theta)
{
  if (xi.global_squared() == 0.0)
  {
    return m.empty();
  }
  return is_threshold_set(xi, m, (1.0 - theta) * xi.global() / static_cast<double>(xi.size()),
                          true);
}

bool satisfies_general(const IndicatorField &xi, const MarkedSet &m,
                       const std::function<double(double)> &m_fn)
{
  return max_unmarked(xi, m) <= m_fn(xi.aggregate(m.elements()));
}

bool satisfies_strategy_a(const IndicatorField &eta, const IndicatorField &zeta,
                          const MarkedSet &m, const std::function<double(double, double)> &v_fn)
{
  return max_unmarked(eta, m) * max_unmarked(zeta, m) <=
         v_fn(eta.aggregate(m.elements()), zeta.aggregate(m.elements()));
}

bool satisfies_strategy_b(const IndicatorField &eta, const IndicatorField &zeta,
                          const MarkedSet &m, double theta, const WeightFunction &w)
{
  const double x = eta.aggregate_squared(m.elements()) / eta.global_squared();
  const double y = zeta.aggregate_squared(m.elements()) / zeta.global_squared();
  return 0.0 < theta && theta <= w.fn(x, y);
}

bool satisfies_request(const IndicatorField &eta, const IndicatorField &zeta, const MarkedSet &m,
                       const MarkRequest &request)
{
  const double theta = request.theta;
  switch (request.recipe)
  {
  case MarkRecipe::doerfler_smaller:
    return satisfies_doerfler(eta, m, theta) || satisfies_doerfler(zeta, m, theta);
  case MarkRecipe::doerfler_union:
    return satisfies_doerfler(eta, m, theta) && satisfies_doerfler(zeta, m, theta);
  case MarkRecipe::maximum_union:
  {
    const double te = (1.0 - theta) * max_value(eta), tz = (1.0 - theta) * max_value(zeta);
    return is_union_of(eta, zeta, m, te, tz, false);
  }
  case MarkRecipe::equidist_union:
  {
    const double te = (1.0 - theta) * eta.global() / static_cast<double>(eta.size());
    const double tz = (1.0 - theta) * zeta.global() / static_cast<double>(zeta.size());
    return is_union_of(eta, zeta, m, te, tz, true);
  }
  case MarkRecipe::rho_doerfler:
    return satisfies_doerfler(weighted_indicator(eta, zeta), m, theta);
  case MarkRecipe::strategy_a:
    return satisfies_strategy_a(eta, zeta, m, request.v_fn);
  case MarkRecipe::strategy_b:
    return satisfies_strategy_b(eta, zeta, m, theta, request.weight);
  }
  return false;
}

}  // namespace goafem
