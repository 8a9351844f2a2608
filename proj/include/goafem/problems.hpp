#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "goafem/estimators.hpp"
#include "goafem/fespace.hpp"
#include "goafem/solver.hpp"

namespace goafem
{

struct DiscreteSolutions
{
  DiscreteFunction u;
  DiscreteFunction z;
  SolveReport primal;
  SolveReport dual;
  int newton_iterations = 0;
};

// A primal problem, a goal functional and the matching dual problem together with their
// residual estimators mu (primal) and nu (dual).
class GoalProblem
{
public:
  virtual ~GoalProblem() = default;

  virtual std::string name() const = 0;
  virtual Triangulation initial_mesh() const = 0;
  // Primal solve, then the dual solve (which may depend on u).
  virtual DiscreteSolutions solve(std::shared_ptr<const FeSpace> space,
                                  const SolverOptions &options = {}) const = 0;
  virtual double goal(const DiscreteFunction &u) const = 0;
  virtual IndicatorField primal_indicators(const DiscreteFunction &u) const = 0;
  virtual IndicatorField dual_indicators(const DiscreteFunction &u,
                                         const DiscreteFunction &z) const = 0;
  virtual std::optional<double> exact_goal() const { return std::nullopt; }

  Combination combination() const { return combination_; }
  void set_combination(Combination mode) { combination_ = mode; }

  CombinedIndicators indicators(const DiscreteSolutions &s) const
  {
    return combine(primal_indicators(s.u), dual_indicators(s.u, s.z), combination_);
  }

protected:
  Combination combination_ = Combination::separate;
};

// -Delta u = -div f, goal G(v) = int g . grad v on the unit square; f and g are
// piecewise constant and the initial mesh must resolve their discontinuities.
class MsLinearProblem : public GoalProblem
{
public:
  // Default data: f = (-1, 0) where x + y < 1/2, g = (1, 0) where x + y > 3/2.
  MsLinearProblem();
  MsLinearProblem(std::function<Vec2(const QuadPoint &)> f, std::function<Vec2(const QuadPoint &)> g,
                  Triangulation initial);

  std::string name() const override { return "ms-linear"; }
  Triangulation initial_mesh() const override { return initial_; }
  DiscreteSolutions solve(std::shared_ptr<const FeSpace> space,
                          const SolverOptions &options = {}) const override;
  double goal(const DiscreteFunction &u) const override;
  IndicatorField primal_indicators(const DiscreteFunction &u) const override;
  IndicatorField dual_indicators(const DiscreteFunction &u,
                                 const DiscreteFunction &z) const override;

  static Vec2 default_f(Point x);
  static Vec2 default_g(Point x);

private:
  VectorField f_;
  VectorField g_;
  Triangulation initial_;
};

// Uniformly refines `mesh` until no element is crossed by any of the lines x + y = c.
// Throws InvalidArgument if that takes more than max_levels refinements.
Triangulation resolve_diagonal_lines(const Triangulation &mesh, std::span<const double> offsets,
                                     int max_levels = 8);

// Poisson with f = 1 on the L-shape, goal 1/2 int lambda |grad u|^2, linearized dual.
class LshapeQuadraticProblem : public GoalProblem
{
public:
  explicit LshapeQuadraticProblem(Combination mode = Combination::product_form);

  std::string name() const override { return "lshape-quadratic"; }
  Triangulation initial_mesh() const override { return lshape_mesh(); }
  DiscreteSolutions solve(std::shared_ptr<const FeSpace> space,
                          const SolverOptions &options = {}) const override;
  double goal(const DiscreteFunction &u) const override;
  IndicatorField primal_indicators(const DiscreteFunction &u) const override;
  IndicatorField dual_indicators(const DiscreteFunction &u,
                                 const DiscreteFunction &z) const override;

  static constexpr Point center{0.5, 0.5};
  static double lambda(Point x);
  static Vec2 grad_lambda(Point x);
};

// -div(A grad u) + b(u) = f, goal int g u; dual with the weight b'(u).
class SemilinearProblem : public GoalProblem
{
public:
  // Default instance: A = I, b(s) = s^3, f = 1, g = indicator of |x| < 1/2 on the unit square,
  // initial mesh with h = 1/4.
  SemilinearProblem();
  SemilinearProblem(SemilinearData data, ScalarField g, Triangulation initial);

  std::string name() const override { return "semilinear"; }
  Triangulation initial_mesh() const override { return initial_; }
  DiscreteSolutions solve(std::shared_ptr<const FeSpace> space,
                          const SolverOptions &options = {}) const override;
  double goal(const DiscreteFunction &u) const override;
  IndicatorField primal_indicators(const DiscreteFunction &u) const override;
  IndicatorField dual_indicators(const DiscreteFunction &u,
                                 const DiscreteFunction &z) const override;

  const SemilinearData &data() const { return data_; }
  double newton_tolerance = 1e-10;
  int newton_max_iterations = 50;

private:
  SemilinearData data_;
  ScalarField g_;
  Triangulation initial_;
};

// u = sin(pi x) sin(pi y) on the unit square, goal int u. The default initial mesh is the
// 2-triangle square refined to h = 1/4 (32 triangles).
class ManufacturedProblem : public GoalProblem
{
public:
  ManufacturedProblem();
  explicit ManufacturedProblem(Triangulation initial);

  std::string name() const override { return "manufactured"; }
  Triangulation initial_mesh() const override { return initial_; }
  DiscreteSolutions solve(std::shared_ptr<const FeSpace> space,
                          const SolverOptions &options = {}) const override;
  double goal(const DiscreteFunction &u) const override;
  IndicatorField primal_indicators(const DiscreteFunction &u) const override;
  IndicatorField dual_indicators(const DiscreteFunction &u,
                                 const DiscreteFunction &z) const override;
  std::optional<double> exact_goal() const override;

  static double exact(Point x);
  static Vec2 exact_gradient(Point x);
  static double load(Point x);
  // ||grad(u - u_H)||^2 on the given elements (all when empty), exactness-20 quadrature.
  static double energy_error_squared(const DiscreteFunction &u, std::span<const int> elements = {});

private:
  Triangulation initial_;
};

std::vector<std::string> problem_names();
// Throws ConfigError (with the valid names) for unknown names.
std::unique_ptr<GoalProblem> problem_by_name(const std::string &name);

// Solves the Poisson problem K u = rhs on the free DOFs with an existing factorization.
DiscreteFunction solve_on_space(std::shared_ptr<const FeSpace> space, const SpdSolver &solver,
                                const Vector &full_rhs, SolveReport *report = nullptr);

}  // namespace goafem
