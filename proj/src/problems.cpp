#include "goafem/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "goafem/error.hpp"

namespace goafem
{

namespace
{

constexpr double pi = std::numbers::pi;

SparseMatrix poisson_operator(const FeSpace &space)
{
  return restrict_matrix(space, assemble_stiffness(space));
}

// Data evaluated at the element centroid, so that elementwise constant fields take the
// element's value on its edges as well.
QuadPoint at_centroid(const ResidualPoint &rp)
{
  return {rp.point.element, rp.centroid, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
}

// sum_T int_T lambda grad u . grad phi_i
Vector lambda_gradient_load(const DiscreteFunction &u, int degree)
{
  const FeSpace &space = u.space();
  const BasisTable &table = basis_table(space.degree(), degree);
  const int n = table.num_basis;
  Vector load = Vector::Zero(space.num_dofs());
  for (std::size_t t = 0; t < space.mesh().num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(space.mesh(), ti);
    const auto dofs = space.element_dofs(ti);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      const Jet j = u.evaluate(table, geo, ti, static_cast<int>(q));
      const Point x = geo.map(table.rule->points[q]);
      const Vec2 flux =
          geo.area * table.rule->weights[q] * LshapeQuadraticProblem::lambda(x) * j.grad;
      for (int i = 0; i < n; i++)
      {
        load[dofs[i]] += flux.dot(geo.gradient(table.dlambda[q * n + i]));
      }
    }
  }
  return load;
}

}  // namespace

DiscreteFunction solve_on_space(std::shared_ptr<const FeSpace> space, const SpdSolver &solver,
                                const Vector &full_rhs, SolveReport *report)
{
  const Vector x = solver.solve(restrict_vector(*space, full_rhs), report);
  return DiscreteFunction(space, extend_vector(*space, x));
}

Triangulation resolve_diagonal_lines(const Triangulation &mesh, std::span<const double> offsets,
                                     int max_levels)
{
  Triangulation current = mesh;
  for (int level = 0; level <= max_levels; level++)
  {
    bool crossed = false;
    for (std::size_t t = 0; t < current.num_elements() && !crossed; t++)
    {
      for (double c : offsets)
      {
        double lo = 0.0, hi = 0.0;
        for (int v : current.triangle(static_cast<int>(t)))
        {
          const double s = current.vertex(v).x + current.vertex(v).y - c;
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        if (lo < -1e-14 && hi > 1e-14)
        {
          crossed = true;
          break;
        }
      }
    }
    if (!crossed)
    {
      return current;
    }
    if (level < max_levels)
    {
      current = uniform_refine(current, 1);
    }
  }
  throw InvalidArgument("initial mesh does not resolve the data discontinuities after " +
                        std::to_string(max_levels) + " uniform refinements");
}

// ---- ms-linear ----

Vec2 MsLinearProblem::default_f(Point x)
{
  return x.x + x.y < 0.5 ? Vec2(-1.0, 0.0) : Vec2(0.0, 0.0);
}

Vec2 MsLinearProblem::default_g(Point x)
{
  return x.x + x.y > 1.5 ? Vec2(1.0, 0.0) : Vec2(0.0, 0.0);
}

MsLinearProblem::MsLinearProblem()
    : f_(pointwise_vector(default_f)), g_(pointwise_vector(default_g)),
      initial_(resolve_diagonal_lines(unit_square_mesh(), std::vector<double>{0.5, 1.5}))
{
}

MsLinearProblem::MsLinearProblem(VectorField f, VectorField g, Triangulation initial)
    : f_(std::move(f)), g_(std::move(g)), initial_(std::move(initial))
{
}

DiscreteSolutions MsLinearProblem::solve(std::shared_ptr<const FeSpace> space,
                                         const SolverOptions &options) const
{
  const SpdSolver solver(poisson_operator(*space), options);
  SolveReport rp, rd;
  DiscreteFunction u = solve_on_space(space, solver, assemble_load_gradient(*space, f_), &rp);
  DiscreteFunction z = solve_on_space(space, solver, assemble_load_gradient(*space, g_), &rd);
  return {std::move(u), std::move(z), rp, rd, 0};
}

double MsLinearProblem::goal(const DiscreteFunction &u) const
{
  return assemble_load_gradient(u.space(), g_).dot(u.coefficients());
}

IndicatorField MsLinearProblem::primal_indicators(const DiscreteFunction &u) const
{
  const int p = u.space().degree();
  ResidualRecipe recipe;
  recipe.volume = [](const ResidualPoint &rp) { return rp.fields[0].laplacian(); };
  recipe.flux = [this](const ResidualPoint &rp) {
    return Vec2(rp.fields[0].grad - f_(at_centroid(rp)));
  };
  recipe.volume_degree = 2 * p;
  recipe.edge_degree = 2 * p;
  const DiscreteFunction *fields[] = {&u};
  return estimate_residual(fields, recipe);
}

IndicatorField MsLinearProblem::dual_indicators(const DiscreteFunction &,
                                                const DiscreteFunction &z) const
{
  const int p = z.space().degree();
  ResidualRecipe recipe;
  recipe.volume = [](const ResidualPoint &rp) { return rp.fields[0].laplacian(); };
  recipe.flux = [this](const ResidualPoint &rp) {
    return Vec2(rp.fields[0].grad - g_(at_centroid(rp)));
  };
  recipe.volume_degree = 2 * p;
  recipe.edge_degree = 2 * p;
  const DiscreteFunction *fields[] = {&z};
  return estimate_residual(fields, recipe);
}

// ---- lshape-quadratic ----

LshapeQuadraticProblem::LshapeQuadraticProblem(Combination mode) { combination_ = mode; }

double LshapeQuadraticProblem::lambda(Point x)
{
  const Point d = x - center;
  return 1.0 / (1e-2 + dot(d, d));
}

Vec2 LshapeQuadraticProblem::grad_lambda(Point x)
{
  const double l = lambda(x);
  return -2.0 * l * l * Vec2(x.x - center.x, x.y - center.y);
}

DiscreteSolutions LshapeQuadraticProblem::solve(std::shared_ptr<const FeSpace> space,
                                                const SolverOptions &options) const
{
  const int p = space->degree();
  const SpdSolver solver(poisson_operator(*space), options);
  SolveReport rp, rd;
  DiscreteFunction u = solve_on_space(
      space, solver, assemble_load_scalar(*space, [](const QuadPoint &) { return 1.0; }, 2 * p),
      &rp);
  DiscreteFunction z = solve_on_space(space, solver, lambda_gradient_load(u, 2 * p + 4), &rd);
  return {std::move(u), std::move(z), rp, rd, 0};
}

double LshapeQuadraticProblem::goal(const DiscreteFunction &u) const
{
  const FeSpace &space = u.space();
  const BasisTable &table = basis_table(space.degree(), 2 * space.degree() + 4);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.mesh().num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(space.mesh(), ti);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      const Jet j = u.evaluate(table, geo, ti, static_cast<int>(q));
      sum += geo.area * table.rule->weights[q] * lambda(geo.map(table.rule->points[q])) *
             j.grad.squaredNorm();
    }
  }
  return 0.5 * sum;
}

IndicatorField LshapeQuadraticProblem::primal_indicators(const DiscreteFunction &u) const
{
  return estimate_poisson(u, [](const QuadPoint &) { return 1.0; }, true);
}

IndicatorField LshapeQuadraticProblem::dual_indicators(const DiscreteFunction &u,
                                                       const DiscreteFunction &z) const
{
  // z solves a(v, z) = int lambda grad u . grad v, i.e. -div(grad z - lambda grad u) = 0.
  ResidualRecipe recipe;
  recipe.volume = [](const ResidualPoint &rp) {
    const Jet &ju = rp.fields[0];
    const Jet &jz = rp.fields[1];
    const Point x = rp.point.x;
    return jz.laplacian() - lambda(x) * ju.laplacian() - grad_lambda(x).dot(ju.grad);
  };
  recipe.flux = [](const ResidualPoint &rp) {
    return Vec2(rp.fields[1].grad - lambda(rp.point.x) * rp.fields[0].grad);
  };
  recipe.edge_degree = 2 * z.space().degree() + 4;
  const DiscreteFunction *fields[] = {&u, &z};
  return estimate_residual(fields, recipe);
}

// ---- semilinear ----

// Same h = 1/4 start as the manufactured problem.
SemilinearProblem::SemilinearProblem() : initial_(uniform_refine(unit_square_mesh(), 4))
{
  data_.diffusion = Mat2::Identity();
  data_.b = [](double s) { return s * s * s; };
  data_.db = [](double s) { return 3.0 * s * s; };
  data_.f = [](const QuadPoint &) { return 1.0; };
  g_ = [](const QuadPoint &qp) { return dot(qp.x, qp.x) < 0.25 ? 1.0 : 0.0; };
}

SemilinearProblem::SemilinearProblem(SemilinearData data, ScalarField g, Triangulation initial)
    : data_(std::move(data)), g_(std::move(g)), initial_(std::move(initial))
{
}

DiscreteSolutions SemilinearProblem::solve(std::shared_ptr<const FeSpace> space,
                                           const SolverOptions &options) const
{
  NewtonReport newton;
  DiscreteFunction u = newton_semilinear(data_, DiscreteFunction::zero(space), newton_tolerance,
                                         newton_max_iterations, &newton, options);
  StiffnessOptions so;
  so.matrix = data_.diffusion;
  const FeSpace &s = *space;
  const DiscreteFunction &uref = u;
  ScalarField weight = [&](const QuadPoint &qp) {
    const Bary pts[] = {qp.lambda};
    const double d = data_.db(eval_element(uref, qp.element, pts).values[0]);
    if (d < 0.0)
    {
      throw NumericalError("semilinear term is not monotone: b'(u) < 0");
    }
    return d;
  };
  const SparseMatrix op = restrict_matrix(s, assemble_stiffness(s, so)) +
                          restrict_matrix(s, assemble_mass_weighted(s, weight));
  SolveReport rd;
  DiscreteFunction z = solve_on_space(space, SpdSolver(op, options), assemble_load_scalar(s, g_), &rd);
  return {std::move(u), std::move(z), SolveReport{}, rd, newton.iterations};
}

double SemilinearProblem::goal(const DiscreteFunction &u) const
{
  return integrate_product(u, g_, 2 * u.space().degree() + 4);
}

IndicatorField SemilinearProblem::primal_indicators(const DiscreteFunction &u) const
{
  ResidualRecipe recipe;
  const Mat2 a = data_.diffusion;
  recipe.volume = [this, a](const ResidualPoint &rp) {
    const Jet &j = rp.fields[0];
    return a.cwiseProduct(j.hessian).sum() - data_.b(j.value) + data_.f(rp.point);
  };
  recipe.flux = [a](const ResidualPoint &rp) { return Vec2(a * rp.fields[0].grad); };
  const DiscreteFunction *fields[] = {&u};
  return estimate_residual(fields, recipe);
}

IndicatorField SemilinearProblem::dual_indicators(const DiscreteFunction &u,
                                                  const DiscreteFunction &z) const
{
  ResidualRecipe recipe;
  const Mat2 a = data_.diffusion;
  recipe.volume = [this, a](const ResidualPoint &rp) {
    const Jet &ju = rp.fields[0];
    const Jet &jz = rp.fields[1];
    return a.cwiseProduct(jz.hessian).sum() - data_.db(ju.value) * jz.value + g_(rp.point);
  };
  recipe.flux = [a](const ResidualPoint &rp) { return Vec2(a * rp.fields[1].grad); };
  const DiscreteFunction *fields[] = {&u, &z};
  return estimate_residual(fields, recipe);
}

// ---- manufactured ----

// h = 1/4: the 2-triangle square has no interior node for p = 1.
ManufacturedProblem::ManufacturedProblem() : initial_(uniform_refine(unit_square_mesh(), 4)) {}

ManufacturedProblem::ManufacturedProblem(Triangulation initial) : initial_(std::move(initial)) {}

double ManufacturedProblem::exact(Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); }

Vec2 ManufacturedProblem::exact_gradient(Point x)
{
  return pi * Vec2(std::cos(pi * x.x) * std::sin(pi * x.y), std::sin(pi * x.x) * std::cos(pi * x.y));
}

double ManufacturedProblem::load(Point x) { return 2.0 * pi * pi * exact(x); }

std::optional<double> ManufacturedProblem::exact_goal() const { return 4.0 / (pi * pi); }

DiscreteSolutions ManufacturedProblem::solve(std::shared_ptr<const FeSpace> space,
                                             const SolverOptions &options) const
{
  const int p = space->degree();
  const SpdSolver solver(poisson_operator(*space), options);
  SolveReport rp, rd;
  DiscreteFunction u = solve_on_space(space, solver, assemble_load_scalar(*space, pointwise(load)), &rp);
  DiscreteFunction z = solve_on_space(
      space, solver, assemble_load_scalar(*space, [](const QuadPoint &) { return 1.0; }, p), &rd);
  return {std::move(u), std::move(z), rp, rd, 0};
}

double ManufacturedProblem::goal(const DiscreteFunction &u) const
{
  return assemble_load_scalar(u.space(), [](const QuadPoint &) { return 1.0; }, u.space().degree())
      .dot(u.coefficients());
}

IndicatorField ManufacturedProblem::primal_indicators(const DiscreteFunction &u) const
{
  return estimate_poisson(u, pointwise(load));
}

IndicatorField ManufacturedProblem::dual_indicators(const DiscreteFunction &,
                                                    const DiscreteFunction &z) const
{
  return estimate_poisson(z, [](const QuadPoint &) { return 1.0; }, true);
}

double ManufacturedProblem::energy_error_squared(const DiscreteFunction &u,
                                                 std::span<const int> elements)
{
  const FeSpace &space = u.space();
  const BasisTable &table = basis_table(space.degree(), 20);
  double sum = 0.0;
  auto add = [&](int t) {
    const ElementGeometry geo(space.mesh(), t);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      const Jet j = u.evaluate(table, geo, t, static_cast<int>(q));
      const Vec2 e = exact_gradient(geo.map(table.rule->points[q])) - j.grad;
      sum += geo.area * table.rule->weights[q] * e.squaredNorm();
    }
  };
  if (elements.empty())
  {
    for (std::size_t t = 0; t < space.mesh().num_elements(); t++)
    {
      add(static_cast<int>(t));
    }
  }
  else
  {
    for (int t : elements)
    {
      add(t);
    }
  }
  return sum;
}

std::vector<std::string> problem_names()
{
  return {"ms-linear", "lshape-quadratic", "semilinear", "manufactured"};
}

std::unique_ptr<GoalProblem> problem_by_name(const std::string &name)
{
  if (name == "ms-linear")
  {
    return std::make_unique<MsLinearProblem>();
  }
  if (name == "lshape-quadratic")
  {
    return std::make_unique<LshapeQuadraticProblem>();
  }
  if (name == "semilinear")
  {
    return std::make_unique<SemilinearProblem>();
  }
  if (name == "manufactured")
  {
    return std::make_unique<ManufacturedProblem>();
  }
  std::string msg = "unknown problem '" + name + "'; valid:";
  for (const auto &n : problem_names())
  {
    msg += " " + n;
  }
  throw ConfigError(msg);
}

}  // namespace goafem
