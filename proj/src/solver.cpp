#include "goafem/solver.hpp"

#include <chrono>
#include <cmath>

#include "goafem/error.hpp"

namespace goafem
{

SpdSolver::SpdSolver(const SparseMatrix &a, SolverOptions options) : a_(a), options_(options)
{
  if (a_.rows() != a_.cols())
  {
    throw InvalidArgument("SpdSolver: operator is not square");
  }
  if (a_.rows() == 0)
  {
    return;
  }
  if (a_.rows() < options_.direct_limit)
  {
    llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(a_);
    if (llt_->info() != Eigen::Success)
    {
      throw NumericalError("Cholesky factorization failed: operator is not SPD");
    }
  }
  else
  {
    inv_diag_ = a_.diagonal();
    for (Eigen::Index i = 0; i < inv_diag_.size(); i++)
    {
      if (!(inv_diag_[i] > 0.0))
      {
        throw NumericalError("non-positive diagonal entry: operator is not SPD");
      }
      inv_diag_[i] = 1.0 / inv_diag_[i];
    }
  }
}

Vector SpdSolver::solve(const Vector &rhs, SolveReport *report) const
{
  const auto start = std::chrono::steady_clock::now();
  if (rhs.size() != a_.rows())
  {
    throw InvalidArgument("SpdSolver: right-hand side has wrong length");
  }
  SolveReport rep;
  const double bnorm = rhs.norm();
  Vector x = Vector::Zero(rhs.size());
  if (bnorm > 0.0)
  {
    if (llt_)
    {
      x = llt_->solve(rhs);
    }
    else
    {
      // Diagonally preconditioned conjugate gradients.
      Vector r = rhs;
      Vector z = inv_diag_.cwiseProduct(r);
      Vector d = z;
      double rz = r.dot(z);
      const int max_iter = 10 * static_cast<int>(rhs.size()) + 100;
      for (int it = 0; it < max_iter && r.norm() > options_.rel_tol * bnorm; it++)
      {
        const Vector ad = a_ * d;
        const double curvature = d.dot(ad);
        if (!(curvature > 0.0))
        {
          throw NumericalError("conjugate gradients: negative curvature, operator is not SPD");
        }
        const double alpha = rz / curvature;
        x += alpha * d;
        r -= alpha * ad;
        z = inv_diag_.cwiseProduct(r);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
        rep.iterations = it + 1;
      }
    }
    rep.relative_residual = (a_ * x - rhs).norm() / bnorm;
    if (!(rep.relative_residual <= options_.rel_tol))
    {
      throw NumericalError("linear solve missed tolerance: relative residual " +
                           std::to_string(rep.relative_residual));
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (report)
  {
    *report = rep;
  }
  return x;
}

Vector solve_spd(const SparseMatrix &a, const Vector &rhs, double rel_tol, SolveReport *report)
{
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
  {
    throw InvalidArgument("solve_spd: rel_tol must lie in (0, 1)");
  }
  SolverOptions options;
  options.rel_tol = rel_tol;
  return SpdSolver(a, options).solve(rhs, report);
}

namespace
{

// R(u)_i = int A grad u . grad phi_i + b(u) phi_i - f phi_i over free DOFs.
Vector semilinear_residual(const SemilinearData &data, const SparseMatrix &stiffness,
                           const Vector &load, const DiscreteFunction &u)
{
  const FeSpace &space = u.space();
  const int p = space.degree();
  const BasisTable &table = basis_table(p, 2 * p + 4);
  const int n = table.num_basis;
  Vector nonlinear = Vector::Zero(space.num_dofs());
  for (std::size_t t = 0; t < space.mesh().num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(space.mesh(), ti);
    const auto dofs = space.element_dofs(ti);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      double uq = 0.0;
      for (int i = 0; i < n; i++)
      {
        uq += u.coefficients()[dofs[i]] * table.values[q * n + i];
      }
      const double w = geo.area * table.rule->weights[q] * data.b(uq);
      for (int i = 0; i < n; i++)
      {
        nonlinear[dofs[i]] += w * table.values[q * n + i];
      }
    }
  }
  return stiffness * restrict_vector(space, u.coefficients()) +
         restrict_vector(space, nonlinear) - load;
}

ScalarField derivative_weight(const SemilinearData &data, const DiscreteFunction &u)
{
  const FeSpace &space = u.space();
  return [&data, &u, &space](const QuadPoint &qp) {
    const auto dofs = space.element_dofs(qp.element);
    const int n = space.local_size();
    std::vector<double> values(n);
    std::vector<std::array<double, 3>> dl(n);
    std::vector<std::array<double, 9>> d2(n);
    space.basis().evaluate(qp.lambda, values, dl, d2);
    double uq = 0.0;
    for (int i = 0; i < n; i++)
    {
      uq += u.coefficients()[dofs[i]] * values[i];
    }
    const double d = data.db(uq);
    if (d < 0.0)
    {
      throw NumericalError("semilinear term is not monotone: b'(u) < 0");
    }
    return d;
  };
}

}  // namespace

DiscreteFunction newton_semilinear(const SemilinearData &data, const DiscreteFunction &initial,
                                   double tol, int max_iter, NewtonReport *report,
                                   SolverOptions options)
{
  const auto space = initial.space_ptr();
  StiffnessOptions so;
  so.matrix = data.diffusion;
  const SparseMatrix stiffness = restrict_matrix(*space, assemble_stiffness(*space, so));
  const Vector load = restrict_vector(*space, assemble_load_scalar(*space, data.f));
  const double fnorm = load.norm();

  // Iterate in S^p_0: Dirichlet values of the initial guess are dropped.
  DiscreteFunction u(space, extend_vector(*space, restrict_vector(*space, initial.coefficients())));
  Vector res = semilinear_residual(data, stiffness, load, u);
  double rnorm = res.norm();
  NewtonReport rep;
  rep.residual_history.push_back(rnorm);
  while (rnorm > tol * fnorm)
  {
    if (rep.iterations >= max_iter)
    {
      throw NumericalError("Newton iteration did not converge within " +
                           std::to_string(max_iter) + " steps (residual " +
                           std::to_string(rnorm) + ")");
    }
    const SparseMatrix jacobian =
        stiffness + restrict_matrix(*space, assemble_mass_weighted(*space, derivative_weight(data, u)));
    const Vector step = SpdSolver(jacobian, options).solve(-res);
    double damping = 1.0;
    for (;;)
    {
      DiscreteFunction trial(
          space, extend_vector(*space, restrict_vector(*space, u.coefficients()) + damping * step));
      Vector trial_res = semilinear_residual(data, stiffness, load, trial);
      const double trial_norm = trial_res.norm();
      if (trial_norm < rnorm || damping < 1e-4)
      {
        u = std::move(trial);
        res = std::move(trial_res);
        rnorm = trial_norm;
        break;
      }
      damping *= 0.5;
    }
    rep.iterations++;
    rep.residual_history.push_back(rnorm);
  }
  if (report)
  {
    *report = rep;
  }
  return u;
}

}  // namespace goafem
