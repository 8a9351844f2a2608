#pragma once

#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>

#include "goafem/fespace.hpp"

namespace goafem
{

struct SolveReport
{
  int iterations = 0;  // 0 for the direct solver
  double relative_residual = 0.0;
  double wall_seconds = 0.0;
};

struct SolverOptions
{
  double rel_tol = 1e-10;
  // Systems of this dimension or larger use diagonally scaled CG instead of Cholesky.
  int direct_limit = 200000;
};

// Factorization of one SPD operator, reusable for several right-hand sides.
class SpdSolver
{
public:
  explicit SpdSolver(const SparseMatrix &a, SolverOptions options = {});

  Vector solve(const Vector &rhs, SolveReport *report = nullptr) const;
  int dimension() const { return static_cast<int>(a_.rows()); }

private:
  SparseMatrix a_;
  SolverOptions options_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
  Vector inv_diag_;
};

// Solves A x = b with ||A x - b|| <= rel_tol ||b||. Throws NumericalError on a
// non-SPD operator or if the tolerance is not met.
Vector solve_spd(const SparseMatrix &a, const Vector &rhs, double rel_tol,
                 SolveReport *report = nullptr);

// Data of -div(A grad u) + b(u) = f with homogeneous Dirichlet conditions; b' >= 0.
struct SemilinearData
{
  Mat2 diffusion = Mat2::Identity();
  std::function<double(double)> b;
  std::function<double(double)> db;
  ScalarField f;
};

struct NewtonReport
{
  int iterations = 0;
  std::vector<double> residual_history;  // ||R(u_k)||, k = 0, 1, ...
};

// Damped Newton iteration; stops once ||R(u)|| <= tol * ||F||.
DiscreteFunction newton_semilinear(const SemilinearData &data, const DiscreteFunction &initial,
                                   double tol, int max_iter, NewtonReport *report = nullptr,
                                   SolverOptions options = {});

}  // namespace goafem
