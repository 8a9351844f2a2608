#pragma once

#include <array>
#include <vector>

namespace goafem
{

// Quadrature on the reference triangle in barycentric coordinates. Weights are normalized
// to sum to one, so that integral over T = |T| * sum_q w_q f(x_q).
struct QuadratureRule
{
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const { return weights.size(); }
};

// Gauss-Legendre rule on [0, 1] with n points (exact to degree 2n - 1), weights sum to one.
struct LineRule
{
  std::vector<double> points;
  std::vector<double> weights;
  int exactness_degree = 0;
};

LineRule gauss_legendre(int n);
LineRule line_rule(int degree);

// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total degree <= degree.
// Rules are cached per degree; the returned reference stays valid for the program lifetime.
const QuadratureRule &triangle_rule(int degree);

}  // namespace goafem
