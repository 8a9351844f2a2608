#include <doctest.h>

#include <cmath>
#include <random>

#include "goafem/error.hpp"
#include "goafem/solver.hpp"

using namespace goafem;

namespace
{

std::shared_ptr<const FeSpace> space_on(const Triangulation &mesh, int p)
{
  return std::make_shared<const FeSpace>(std::make_shared<const Triangulation>(mesh), p);
}

// Dense Gaussian elimination with partial pivoting.
std::vector<double> gauss(std::vector<std::vector<double>> a, std::vector<double> b)
{
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; k++)
  {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; i++)
    {
      if (std::abs(a[i][k]) > std::abs(a[piv][k]))
      {
        piv = i;
      }
    }
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; i++)
    {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; j++)
      {
        a[i][j] -= f * a[k][j];
      }
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;)
  {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; j++)
    {
      s -= a[i][j] * x[j];
    }
    x[i] = s / a[i][i];
  }
  return x;
}

Vector free_load_one(const FeSpace &space)
{
  return restrict_vector(space, assemble_load_scalar(space, pointwise([](Point) { return 1.0; })));
}

}  // namespace

TEST_CASE("random dense SPD system against Gaussian elimination")
{
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const int n = 50;
  std::vector<std::vector<double>> m(n, std::vector<double>(n));
  for (auto &row : m)
  {
    for (auto &v : row)
    {
      v = normal(rng);
    }
  }
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      double s = i == j ? 1.0 : 0.0;
      for (int k = 0; k < n; k++)
      {
        s += m[k][i] * m[k][j];
      }
      a[i][j] = s;
      trip.emplace_back(i, j, s);
    }
  }
  std::vector<double> b(n);
  Vector rhs(n);
  for (int i = 0; i < n; i++)
  {
    b[i] = rhs[i] = normal(rng);
  }
  SparseMatrix sa(n, n);
  sa.setFromTriplets(trip.begin(), trip.end());
  const std::vector<double> oracle = gauss(a, b);

  SolverOptions direct;
  SolverOptions cg;
  cg.direct_limit = 1;
  cg.rel_tol = 1e-13;
  for (const auto &opt : {direct, cg})
  {
    SolveReport report;
    const Vector x = SpdSolver(sa, opt).solve(rhs, &report);
    double err = 0.0;
    for (int i = 0; i < n; i++)
    {
      err += (x[i] - oracle[i]) * (x[i] - oracle[i]);
    }
    CHECK(std::sqrt(err) <= 1e-8);
    CHECK(report.relative_residual <= opt.rel_tol);
  }
}

TEST_CASE("trivial systems")
{
  SparseMatrix a(1, 1);
  a.insert(0, 0) = 4.0;
  Vector b(1);
  b[0] = 3.0;
  CHECK(solve_spd(a, b, 1e-12)[0] == 0.75);

  SparseMatrix a3(3, 3);
  a3.insert(0, 0) = 2.0;
  a3.insert(1, 1) = 2.0;
  a3.insert(2, 2) = 2.0;
  SolveReport report;
  const Vector x = solve_spd(a3, Vector::Zero(3), 1e-12, &report);
  CHECK(x.norm() == 0.0);
  CHECK(report.iterations == 0);

  SparseMatrix neg(1, 1);
  neg.insert(0, 0) = -1.0;
  CHECK_THROWS_AS(solve_spd(neg, b, 1e-12), NumericalError);
}

TEST_CASE("Newton with b = 0 is one linear solve")
{
  const auto space = space_on(uniform_refine(unit_square_mesh(), 4), 2);
  SemilinearData data;
  data.b = [](double) { return 0.0; };
  data.db = [](double) { return 0.0; };
  data.f = pointwise([](Point) { return 1.0; });
  NewtonReport report;
  const DiscreteFunction u = newton_semilinear(data, DiscreteFunction::zero(space), 1e-12, 20, &report);
  const Vector lin = solve_spd(restrict_matrix(*space, assemble_stiffness(*space)),
                               free_load_one(*space), 1e-14);
  CHECK((restrict_vector(*space, u.coefficients()) - lin).norm() <= 1e-12 * lin.norm());
  CHECK(report.iterations == 1);
}

TEST_CASE("Newton with b(s) = s solves (K + M) x = F")
{
  const auto space = space_on(uniform_refine(unit_square_mesh(), 3), 1);
  SemilinearData data;
  data.b = [](double s) { return s; };
  data.db = [](double) { return 1.0; };
  data.f = pointwise([](Point) { return 1.0; });
  const DiscreteFunction u = newton_semilinear(data, DiscreteFunction::zero(space), 1e-13, 20);
  const SparseMatrix km = restrict_matrix(
      *space, SparseMatrix(assemble_stiffness(*space) +
                           assemble_mass_weighted(*space, pointwise([](Point) { return 1.0; }))));
  const Vector ref = solve_spd(km, free_load_one(*space), 1e-14);
  CHECK((restrict_vector(*space, u.coefficients()) - ref).norm() <= 1e-10 * ref.norm());
}

TEST_CASE("Newton with b(s) = s^3 converges quadratically")
{
  const auto space = space_on(uniform_refine(unit_square_mesh(), 4), 2);
  SemilinearData data;
  data.b = [](double s) { return s * s * s; };
  data.db = [](double s) { return 3 * s * s; };
  data.f = pointwise([](Point) { return 200.0; });
  CHECK(data.db(2.0) == 12.0);
  NewtonReport report;
  newton_semilinear(data, DiscreteFunction::zero(space), 1e-12, 50, &report);
  const auto &r = report.residual_history;
  REQUIRE(r.size() >= 3);
  CHECK(r.back() <= 1e-10 * r.front());
  // r_{k+1} / r_k^2 stays bounded once the iteration is in the quadratic regime.
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < r.size(); k++)
  {
    if (r[k] < 1e-2 * r.front() && r[k + 1] > 1e-14 * r.front())
    {
      worst = std::max(worst, (r[k + 1] / r.front()) / std::pow(r[k] / r.front(), 2));
    }
  }
  CHECK(worst < 100.0);
}
