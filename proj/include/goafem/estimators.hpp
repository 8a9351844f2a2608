#pragma once

#include <functional>
#include <span>
#include <vector>

#include "goafem/fespace.hpp"

namespace goafem
{

// Per-element nonnegative refinement indicators xi(T) with the l2 aggregate
// xi(U) = (sum_{T in U} xi(T)^2)^{1/2}.
class IndicatorField
{
public:
  IndicatorField() = default;
  // Takes squared indicators; throws InvalidArgument on negative or non-finite entries.
  static IndicatorField from_squared(std::vector<double> squared);
  static IndicatorField from_values(std::span<const double> values);

  std::size_t size() const { return squared_.size(); }
  double value(int t) const;
  double squared(int t) const { return squared_[t]; }
  std::span<const double> squared() const { return squared_; }

  // Global value and its square; the sum runs in ascending element order in extended
  // precision so that every subset aggregate is reproducible.
  double global() const;
  double global_squared() const { return global_squared_; }
  double aggregate_squared(std::span<const int> subset) const;
  double aggregate(std::span<const int> subset) const;

private:
  std::vector<double> squared_;
  double global_squared_ = 0.0;
};

// Data passed to residual callbacks at one quadrature point: the jets of all discrete
// functions the estimator reads (same order as given to estimate_residual).
struct ResidualPoint
{
  QuadPoint point;
  Point centroid;  // element centroid, for evaluating elementwise constant data
  std::span<const Jet> fields;
};

// Residual estimator recipe:
//   xi(T)^2 = h_T^2 ||volume||_{L2(T)}^2 + h_T ||[flux . n]||_{L2(dT cap Omega)}^2,
// with h_T = |T|^{1/2}. Jumps over Dirichlet boundary edges are ignored.
struct ResidualRecipe
{
  std::function<double(const ResidualPoint &)> volume;
  std::function<Vec2(const ResidualPoint &)> flux;
  int volume_degree = -1;  // quadrature exactness; -1: 2p + 4
  int edge_degree = -1;    // -1: 2p
};

IndicatorField estimate_residual(std::span<const DiscreteFunction *const> fields,
                                 const ResidualRecipe &recipe);

// Poisson indicators with scalar load: volume Delta u + f, flux grad u.
IndicatorField estimate_poisson(const DiscreteFunction &u, const ScalarField &f,
                                bool f_is_polynomial = false);

enum class Combination
{
  separate,      // (eta, zeta) = (mu, nu)
  product_form,  // (eta, zeta) = (mu, (mu^2 + nu^2)^{1/2})
  symmetric,     // eta = zeta = (mu^2 + nu^2)^{1/2}
};

struct CombinedIndicators
{
  IndicatorField eta;
  IndicatorField zeta;
};

CombinedIndicators combine(const IndicatorField &mu, const IndicatorField &nu, Combination mode);

// rho(T)^2 = eta(T)^2 zeta^2 + eta^2 zeta(T)^2.
IndicatorField weighted_indicator(const IndicatorField &eta, const IndicatorField &zeta);

// osc(T)^2 = |T| ||(1 - Pi^q_T) D||_{L2(T)}^2, Pi^q_T the L2(T) projection onto P_q.
struct OscillationField
{
  std::vector<double> squared;
  double total_squared() const;
  double patch_squared(std::span<const int> elements) const;
};

OscillationField oscillation(const Triangulation &mesh, const ScalarField &data, int q);

}  // namespace goafem
