#include "goafem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "goafem/error.hpp"

namespace goafem
{

LineRule gauss_legendre(int n)
{
  if (n < 1)
  {
    throw InvalidArgument("gauss_legendre: n must be positive");
  }
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.exactness_degree = 2 * n - 1;
  // Newton iteration on P_n from the Chebyshev-like initial guesses, mapped to [0, 1].
  for (int i = 0; i < n; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/(..) halved for [0, 1]
  }
  return rule;
}

LineRule line_rule(int degree)
{
  return gauss_legendre(std::max(1, (degree + 2) / 2));
}

namespace
{

QuadratureRule make_triangle_rule(int degree)
{
  // x = u, y = (1 - u) v with Jacobian (1 - u): degree + 1 in u, degree in v.
  const LineRule gu = gauss_legendre(std::max(1, (degree + 3) / 2));
  const LineRule gv = gauss_legendre(std::max(1, (degree + 2) / 2));
  QuadratureRule rule;
  rule.exactness_degree = degree;
  for (std::size_t i = 0; i < gu.points.size(); i++)
  {
    for (std::size_t j = 0; j < gv.points.size(); j++)
    {
      const double u = gu.points[i];
      const double x = u;
      const double y = (1.0 - u) * gv.points[j];
      rule.points.push_back({1.0 - x - y, x, y});
      // Reference area 1/2 absorbed: weights sum to one.
      rule.weights.push_back(2.0 * gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace

const QuadratureRule &triangle_rule(int degree)
{
  if (degree < 0)
  {
    throw InvalidArgument("triangle_rule: degree must be nonnegative");
  }
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end())
  {
    it = cache.emplace(degree, make_triangle_rule(degree)).first;
  }
  return it->second;
}

}  // namespace goafem
