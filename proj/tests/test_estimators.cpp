#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "goafem/error.hpp"
#include "goafem/estimators.hpp"
#include "goafem/solver.hpp"

using namespace goafem;

namespace
{

constexpr double pi = std::numbers::pi;

std::shared_ptr<const FeSpace> space_on(const Triangulation &mesh, int p)
{
  return std::make_shared<const FeSpace>(std::make_shared<const Triangulation>(mesh), p);
}

Triangulation random_adaptive_mesh(std::uint64_t seed, int steps)
{
  std::mt19937_64 rng(seed);
  Triangulation mesh = uniform_refine(unit_square_mesh(), 2);
  for (int s = 0; s < steps; s++)
  {
    std::vector<int> marked;
    for (std::size_t t = 0; t < mesh.num_elements(); t++)
    {
      if (rng() % 3 == 0)
      {
        marked.push_back(static_cast<int>(t));
      }
    }
    mesh = refine_nvb(mesh, MarkedSet(marked, mesh.num_elements()));
  }
  return mesh;
}

// Squared Poisson indicators recomputed element by element and edge by edge with
// exactness-20 rules, independent of the assembly in the library.
std::vector<double> brute_force_poisson(const DiscreteFunction &u, const std::function<double(Point)> &f)
{
  const Triangulation &mesh = u.space().mesh();
  std::vector<double> eta2(mesh.num_elements(), 0.0);
  const QuadratureRule &rule = triangle_rule(20);
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const ElementGeometry geo(mesh, static_cast<int>(t));
    const ElementValues v = eval_element(u, static_cast<int>(t), rule.points);
    double vol = 0.0;
    for (std::size_t q = 0; q < rule.size(); q++)
    {
      const double r = v.laplacians[q] + f(geo.map(rule.points[q]));
      vol += geo.area * rule.weights[q] * r * r;
    }
    eta2[t] += geo.area * vol;  // h_T^2 = |T|
  }
  const LineRule line = gauss_legendre(11);
  for (std::size_t e = 0; e < mesh.num_edges(); e++)
  {
    if (mesh.is_boundary_edge(static_cast<int>(e)))
    {
      continue;
    }
    const auto [a_id, b_id] = mesh.edges()[e];
    const Point a = mesh.vertex(a_id), b = mesh.vertex(b_id);
    const double len = norm(b - a);
    const Vec2 n(-(b - a).y / len, (b - a).x / len);
    const auto els = mesh.edge_elements(static_cast<int>(e));
    double jump2 = 0.0;
    for (std::size_t q = 0; q < line.points.size(); q++)
    {
      const Point x = a + line.points[q] * (b - a);
      Vec2 g[2];
      for (int side = 0; side < 2; side++)
      {
        const ElementGeometry geo(mesh, els[side]);
        const Bary pts[] = {geo.barycentric(x)};
        g[side] = eval_element(u, els[side], pts).gradients[0];
      }
      const double j = (g[0] - g[1]).dot(n);
      jump2 += len * line.weights[q] * j * j;
    }
    for (int side = 0; side < 2; side++)
    {
      eta2[els[side]] += std::sqrt(mesh.area(els[side])) * jump2;
    }
  }
  return eta2;
}

}  // namespace

TEST_CASE("indicator field aggregates")
{
  const IndicatorField xi = IndicatorField::from_squared({9.0, 4.0, 1.0});
  CHECK(xi.global_squared() == 14.0);
  CHECK(xi.value(1) == 2.0);
  const int sub[] = {0, 2};
  CHECK(xi.aggregate_squared(sub) == 10.0);
  CHECK_THROWS_AS(IndicatorField::from_squared({1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(IndicatorField::from_squared({NAN}), InvalidArgument);
  const double vals[] = {3.0, 4.0};
  CHECK(IndicatorField::from_values(vals).global() == 5.0);
}

TEST_CASE("Poisson estimator for zero data and for f = 1 on the square")
{
  const auto space = space_on(uniform_refine(unit_square_mesh(), 2), 2);
  const IndicatorField zero =
      estimate_poisson(DiscreteFunction::zero(space), pointwise([](Point) { return 0.0; }), true);
  CHECK(zero.global() == 0.0);

  // u = 0, f = 1, p = 1: mu(T)^2 = |T| * |T|, no jumps.
  const auto sq = space_on(unit_square_mesh(), 1);
  const IndicatorField mu =
      estimate_poisson(DiscreteFunction::zero(sq), pointwise([](Point) { return 1.0; }), true);
  CHECK(mu.squared(0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(mu.squared(1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(mu.global() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
}

TEST_CASE("Poisson estimator against an independent recomputation")
{
  auto f = [](Point x) { return 1.0 + 3.0 * x.x * x.y - x.y * x.y; };
  const Triangulation mesh = random_adaptive_mesh(5, 3);
  for (int p = 1; p <= 3; p++)
  {
    const auto space = space_on(mesh, p);
    const SparseMatrix a = restrict_matrix(*space, assemble_stiffness(*space));
    const Vector b = restrict_vector(*space, assemble_load_scalar(*space, pointwise(f), p + 2));
    const DiscreteFunction u(space, extend_vector(*space, solve_spd(a, b, 1e-12)));
    const IndicatorField mu = estimate_poisson(u, pointwise(f));
    const std::vector<double> ref = brute_force_poisson(u, f);
    double ref_global = 0.0;
    for (std::size_t t = 0; t < ref.size(); t++)
    {
      ref_global += ref[t];
      CHECK(mu.squared(static_cast<int>(t)) == doctest::Approx(ref[t]).epsilon(1e-8));
    }
    CHECK(mu.global_squared() == doctest::Approx(ref_global).epsilon(1e-8));
  }
}

TEST_CASE("combination modes")
{
  const IndicatorField mu = IndicatorField::from_squared({9.0});
  const IndicatorField nu = IndicatorField::from_squared({16.0});
  const auto sym = combine(mu, nu, Combination::symmetric);
  CHECK(sym.eta.value(0) == 5.0);
  CHECK(sym.zeta.value(0) == 5.0);
  const auto sep = combine(mu, nu, Combination::separate);
  CHECK(sep.eta.value(0) == 3.0);
  CHECK(sep.zeta.value(0) == 4.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> m2(40), n2(40);
  for (int i = 0; i < 40; i++)
  {
    m2[i] = unif(rng);
    n2[i] = unif(rng);
  }
  const auto pf = combine(IndicatorField::from_squared(m2), IndicatorField::from_squared(n2),
                          Combination::product_form);
  double sm = 0.0, sn = 0.0;
  for (int i = 0; i < 40; i++)
  {
    sm += m2[i];
    sn += n2[i];
  }
  const double expected = std::sqrt(sm) * std::sqrt(sm + sn);
  CHECK(std::abs(pf.eta.global() * pf.zeta.global() - expected) <= 1e-13 * expected);
  CHECK_THROWS_AS(combine(mu, IndicatorField::from_squared({1.0, 1.0}), Combination::symmetric),
                  InvalidArgument);
}

TEST_CASE("weighted indicator rho")
{
  const IndicatorField zero = IndicatorField::from_squared({0.0, 0.0});
  const IndicatorField some = IndicatorField::from_squared({1.0, 2.0});
  const IndicatorField r0 = weighted_indicator(some, zero);
  CHECK(r0.squared(0) == 0.0);
  CHECK(r0.squared(1) == 0.0);

  const IndicatorField one = IndicatorField::from_squared({1.0});
  CHECK(weighted_indicator(one, one).squared(0) == 2.0);

  const double ev[] = {1, 2, 2}, zv[] = {2, 1, 2};
  const IndicatorField rho =
      weighted_indicator(IndicatorField::from_values(ev), IndicatorField::from_values(zv));
  CHECK(rho.squared(0) == doctest::Approx(45.0).epsilon(1e-15));
}

TEST_CASE("data oscillation")
{
  const Triangulation mesh = uniform_refine(lshape_mesh(), 2);
  const OscillationField constant = oscillation(
      mesh, [&](const QuadPoint &qp) { return static_cast<double>(qp.element % 7); }, 0);
  CHECK(constant.total_squared() == doctest::Approx(0.0).scale(1e-20));

  // D = x on one triangle, q = 0: |T| (int x^2 - |T| xbar^2) with the moment formula
  // int_T x^2 = |T|/6 (x1^2 + x2^2 + x3^2 + x1 x2 + x1 x3 + x2 x3).
  const Triangulation tri({{0.2, 0.1}, {1.3, 0.4}, {0.5, 1.1}}, {{0, 1, 2}}, {{0, 1}, {1, 2}, {0, 2}});
  const double x1 = 0.2, x2 = 1.3, x3 = 0.5;
  const double area = tri.area(0);
  const double second = area / 6.0 * (x1 * x1 + x2 * x2 + x3 * x3 + x1 * x2 + x1 * x3 + x2 * x3);
  const double xbar = (x1 + x2 + x3) / 3.0;
  const double expected = area * (second - area * xbar * xbar);
  const OscillationField osc = oscillation(tri, [](const QuadPoint &qp) { return qp.x.x; }, 0);
  CHECK(osc.squared[0] == doctest::Approx(expected).epsilon(1e-13));
  CHECK(oscillation(tri, [](const QuadPoint &qp) { return qp.x.x; }, 1).squared[0] ==
        doctest::Approx(0.0).scale(1e-20));

  // Global oscillation of the manufactured load: factor 2^{-(q+2)} per halving of h.
  auto f = [](const QuadPoint &qp) {
    return 2 * pi * pi * std::sin(pi * qp.x.x) * std::sin(pi * qp.x.y);
  };
  for (int q = 0; q <= 2; q++)
  {
    std::vector<double> g;
    for (int levels : {4, 6, 8})
    {
      g.push_back(std::sqrt(oscillation(uniform_refine(unit_square_mesh(), levels), f, q).total_squared()));
    }
    const double target = std::pow(2.0, -(q + 2));
    const double factor = g[2] / g[1];
    CHECK(factor > 0.75 * target);
    CHECK(factor < 1.25 * target);
  }
}
