#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "goafem/mesh.hpp"
#include "goafem/quadrature.hpp"

namespace goafem
{

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Bary = std::array<double, 3>;

// Lagrange basis of degree p on the reference triangle, expressed in barycentric
// coordinates. Local node order: the three vertices, then p - 1 nodes on each edge
// (edge k opposite vertex k), then the interior nodes.
class LagrangeBasis
{
public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  // Multi-index (i0, i1, i2), i0 + i1 + i2 = p; node position is multi-index / p.
  const std::array<int, 3> &node(int i) const { return nodes_[i]; }

  // Values, derivatives with respect to the three barycentric coordinates, and second
  // derivatives (row-major 3x3) of all basis functions at one point.
  void evaluate(const Bary &lambda, std::span<double> values,
                std::span<std::array<double, 3>> dlambda,
                std::span<std::array<double, 9>> d2lambda) const;

private:
  int degree_;
  std::vector<std::array<int, 3>> nodes_;
};

// Basis tabulated once on a quadrature rule.
struct BasisTable
{
  const QuadratureRule *rule = nullptr;
  int num_basis = 0;
  std::vector<double> values;                  // [q * n + i]
  std::vector<std::array<double, 3>> dlambda;  // [q * n + i]
  std::vector<std::array<double, 9>> d2lambda; // [q * n + i]
};

BasisTable tabulate(const LagrangeBasis &basis, const QuadratureRule &rule);
BasisTable tabulate(const LagrangeBasis &basis, std::span<const Bary> points);
// Process-wide cache of tabulate(LagrangeBasis(degree), triangle_rule(quadrature_degree)).
const BasisTable &basis_table(int degree, int quadrature_degree);

// Affine geometry of one element.
struct ElementGeometry
{
  std::array<Point, 3> vertices;
  std::array<Vec2, 3> grad_lambda;
  double area = 0.0;

  ElementGeometry(const Triangulation &mesh, int element);
  Point map(const Bary &lambda) const;
  Bary barycentric(Point x) const;
  Vec2 gradient(const std::array<double, 3> &dlambda) const;
  Mat2 hessian(const std::array<double, 9> &d2lambda) const;
};

// Conforming Lagrange space of degree p in {1, 2, 3} with homogeneous Dirichlet
// constraints on the flagged boundary edges. Global numbering: vertices, then edge nodes
// (edges in lexicographic order, nodes ordered away from the lower-index vertex), then
// interior nodes by element.
class FeSpace
{
public:
  FeSpace(std::shared_ptr<const Triangulation> mesh, int degree);

  const Triangulation &mesh() const { return *mesh_; }
  const std::shared_ptr<const Triangulation> &mesh_ptr() const { return mesh_; }
  int degree() const { return basis_.degree(); }
  const LagrangeBasis &basis() const { return basis_; }

  int num_dofs() const { return static_cast<int>(dof_coordinates_.size()); }
  int num_free_dofs() const { return static_cast<int>(free_dofs_.size()); }
  int local_size() const { return basis_.size(); }
  std::span<const int> element_dofs(int element) const
  {
    return std::span<const int>(element_dofs_).subspan(element * local_size(), local_size());
  }
  std::span<const Point> dof_coordinates() const { return dof_coordinates_; }
  bool is_dirichlet(int dof) const { return free_index_[dof] < 0; }
  int free_index(int dof) const { return free_index_[dof]; }
  std::span<const int> free_dofs() const { return free_dofs_; }

private:
  std::shared_ptr<const Triangulation> mesh_;
  LagrangeBasis basis_;
  std::vector<int> element_dofs_;
  std::vector<Point> dof_coordinates_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
};

// Value, gradient and Hessian of a discrete function at one point.
struct Jet
{
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();

  double laplacian() const { return hessian.trace(); }
};

class DiscreteFunction
{
public:
  DiscreteFunction(std::shared_ptr<const FeSpace> space, Vector coefficients);
  static DiscreteFunction zero(std::shared_ptr<const FeSpace> space);

  const FeSpace &space() const { return *space_; }
  const std::shared_ptr<const FeSpace> &space_ptr() const { return space_; }
  const Vector &coefficients() const { return coefficients_; }

  // Evaluation with a basis table on one element (table must match the space degree).
  Jet evaluate(const BasisTable &table, const ElementGeometry &geo, int element, int q) const;

private:
  std::shared_ptr<const FeSpace> space_;
  Vector coefficients_;
};

// Point passed to coefficient callbacks during assembly and estimation.
struct QuadPoint
{
  int element = -1;
  Point x;
  Bary lambda{};
};

using ScalarField = std::function<double(const QuadPoint &)>;
using VectorField = std::function<Vec2(const QuadPoint &)>;

ScalarField pointwise(std::function<double(Point)> f);
VectorField pointwise_vector(std::function<Vec2(Point)> f);

struct StiffnessOptions
{
  ScalarField coefficient;                   // empty: c = 1
  Mat2 matrix = Mat2::Identity();            // constant diffusion tensor
  int quadrature_degree = -1;                // -1: 2p (2p + 4 with a coefficient)
};

// Full operators over all DOFs (Dirichlet rows included); see restrict_matrix.
SparseMatrix assemble_stiffness(const FeSpace &space, const StiffnessOptions &options = {});
SparseMatrix assemble_mass_weighted(const FeSpace &space, const ScalarField &weight,
                                    int quadrature_degree = -1);
Vector assemble_load_scalar(const FeSpace &space, const ScalarField &f,
                            int quadrature_degree = -1);
// vf must be constant on each element; throws InvalidArgument otherwise.
Vector assemble_load_gradient(const FeSpace &space, const VectorField &vf);
// General flux load: entry i = sum_T int_T vf . grad(phi_i).
Vector assemble_load_flux(const FeSpace &space, const VectorField &vf, int quadrature_degree);

SparseMatrix restrict_matrix(const FeSpace &space, const SparseMatrix &full);
Vector restrict_vector(const FeSpace &space, const Vector &full);
Vector extend_vector(const FeSpace &space, const Vector &free);

DiscreteFunction interpolate(std::shared_ptr<const FeSpace> space, std::function<double(Point)> fn);
// Exact transfer of a coarse function to a refined space (nested spaces).
DiscreteFunction prolongate(const DiscreteFunction &coarse, std::shared_ptr<const FeSpace> fine,
                            const RefinementMap &map);

struct ElementValues
{
  std::vector<double> values;
  std::vector<Vec2> gradients;
  std::vector<double> laplacians;
};

ElementValues eval_element(const DiscreteFunction &df, int element, std::span<const Bary> points);

// int_{elements} |grad u|^2 (all elements when the span is empty).
double h1_seminorm_squared(const DiscreteFunction &u, std::span<const int> elements = {});
// int_Omega f * u via quadrature.
double integrate_product(const DiscreteFunction &u, const ScalarField &f, int quadrature_degree);

}  // namespace goafem
