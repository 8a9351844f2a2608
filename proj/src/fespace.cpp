#include "goafem/fespace.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "goafem/error.hpp"

namespace goafem
{

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree)
{
  if (degree < 1 || degree > 3)
  {
    throw InvalidArgument("Lagrange degree must be 1, 2 or 3");
  }
  const int p = degree;
  nodes_ = {{p, 0, 0}, {0, p, 0}, {0, 0, p}};
  for (int k = 0; k < 3; k++)
  {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    for (int ib = 1; ib < p; ib++)
    {
      std::array<int, 3> n{0, 0, 0};
      n[a] = p - ib;
      n[b] = ib;
      nodes_.push_back(n);
    }
  }
  for (int i = 1; i < p; i++)
  {
    for (int j = 1; i + j < p; j++)
    {
      nodes_.push_back({p - i - j, i, j});
    }
  }
}

void LagrangeBasis::evaluate(const Bary &lambda, std::span<double> values,
                             std::span<std::array<double, 3>> dlambda,
                             std::span<std::array<double, 9>> d2lambda) const
{
  const int p = degree_;
  // phi = prod_m (p * lambda_{a_m} - s_m) / (s_m + 1), p linear factors.
  for (std::size_t i = 0; i < nodes_.size(); i++)
  {
    std::array<int, 3> var{};
    std::array<double, 3> f{}, df{};
    int nf = 0;
    for (int a = 0; a < 3; a++)
    {
      for (int s = 0; s < nodes_[i][a]; s++)
      {
        var[nf] = a;
        f[nf] = (p * lambda[a] - s) / (s + 1.0);
        df[nf] = p / (s + 1.0);
        nf++;
      }
    }
    auto product_except = [&](int m, int n) {
      double r = 1.0;
      for (int k = 0; k < nf; k++)
      {
        if (k != m && k != n)
        {
          r *= f[k];
        }
      }
      return r;
    };
    values[i] = product_except(-1, -1);
    dlambda[i] = {0.0, 0.0, 0.0};
    d2lambda[i].fill(0.0);
    for (int m = 0; m < nf; m++)
    {
      dlambda[i][var[m]] += df[m] * product_except(m, -1);
      for (int n = 0; n < nf; n++)
      {
        if (n != m)
        {
          d2lambda[i][3 * var[m] + var[n]] += df[m] * df[n] * product_except(m, n);
        }
      }
    }
  }
}

BasisTable tabulate(const LagrangeBasis &basis, std::span<const Bary> points)
{
  BasisTable table;
  const int n = basis.size();
  table.num_basis = n;
  table.values.resize(points.size() * n);
  table.dlambda.resize(points.size() * n);
  table.d2lambda.resize(points.size() * n);
  for (std::size_t q = 0; q < points.size(); q++)
  {
    basis.evaluate(points[q], std::span(table.values).subspan(q * n, n),
                   std::span(table.dlambda).subspan(q * n, n),
                   std::span(table.d2lambda).subspan(q * n, n));
  }
  return table;
}

BasisTable tabulate(const LagrangeBasis &basis, const QuadratureRule &rule)
{
  BasisTable table = tabulate(basis, std::span<const Bary>(rule.points));
  table.rule = &rule;
  return table;
}

const BasisTable &basis_table(int degree, int quadrature_degree)
{
  static std::mutex mutex;
  static std::map<std::pair<int, int>, BasisTable> cache;
  const QuadratureRule &rule = triangle_rule(quadrature_degree);
  std::lock_guard lock(mutex);
  auto key = std::make_pair(degree, quadrature_degree);
  auto it = cache.find(key);
  if (it == cache.end())
  {
    it = cache.emplace(key, tabulate(LagrangeBasis(degree), rule)).first;
  }
  return it->second;
}

ElementGeometry::ElementGeometry(const Triangulation &mesh, int element)
{
  const auto &tri = mesh.triangle(element);
  for (int k = 0; k < 3; k++)
  {
    vertices[k] = mesh.vertex(tri[k]);
  }
  area = mesh.area(element);
  for (int k = 0; k < 3; k++)
  {
    const Point &b = vertices[(k + 1) % 3];
    const Point &c = vertices[(k + 2) % 3];
    grad_lambda[k] = Vec2(b.y - c.y, c.x - b.x) / (2.0 * area);
  }
}

Point ElementGeometry::map(const Bary &l) const
{
  return l[0] * vertices[0] + l[1] * vertices[1] + l[2] * vertices[2];
}

Bary ElementGeometry::barycentric(Point x) const
{
  Bary l{};
  for (int k = 0; k < 3; k++)
  {
    // lambda_k vanishes on the opposite edge and is affine.
    const Point &b = vertices[(k + 1) % 3];
    l[k] = grad_lambda[k].x() * (x.x - b.x) + grad_lambda[k].y() * (x.y - b.y);
  }
  return l;
}

Vec2 ElementGeometry::gradient(const std::array<double, 3> &d) const
{
  return d[0] * grad_lambda[0] + d[1] * grad_lambda[1] + d[2] * grad_lambda[2];
}

Mat2 ElementGeometry::hessian(const std::array<double, 9> &d2) const
{
  Mat2 h = Mat2::Zero();
  for (int a = 0; a < 3; a++)
  {
    for (int b = 0; b < 3; b++)
    {
      if (d2[3 * a + b] != 0.0)
      {
        h += d2[3 * a + b] * grad_lambda[a] * grad_lambda[b].transpose();
      }
    }
  }
  return h;
}

FeSpace::FeSpace(std::shared_ptr<const Triangulation> mesh, int degree)
  : mesh_(std::move(mesh)), basis_(degree)
{
  const Triangulation &m = *mesh_;
  const int p = degree;
  const int nv = static_cast<int>(m.num_vertices());
  const int ne = static_cast<int>(m.num_edges());
  const int n_interior = (p - 1) * (p - 2) / 2;
  const int ndofs = nv + ne * (p - 1) + static_cast<int>(m.num_elements()) * n_interior;
  const int nloc = basis_.size();

  dof_coordinates_.resize(ndofs);
  element_dofs_.resize(m.num_elements() * nloc);
  for (std::size_t t = 0; t < m.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const auto &tri = m.triangle(ti);
    const auto &edges = m.element_edges(ti);
    int interior = 0;
    for (int i = 0; i < nloc; i++)
    {
      const auto &node = basis_.node(i);
      int dof = -1;
      int zeros = 0, zero_at = -1;
      for (int a = 0; a < 3; a++)
      {
        if (node[a] == 0)
        {
          zeros++;
          zero_at = a;
        }
      }
      if (zeros == 2)
      {
        for (int a = 0; a < 3; a++)
        {
          if (node[a] == p)
          {
            dof = tri[a];
          }
        }
      }
      else if (zeros == 1)
      {
        const int a = (zero_at + 1) % 3, b = (zero_at + 2) % 3;
        const int lower_local = tri[a] < tri[b] ? a : b;
        const int step = p - node[lower_local];
        dof = nv + edges[zero_at] * (p - 1) + (step - 1);
      }
      else
      {
        dof = nv + ne * (p - 1) + ti * n_interior + interior++;
      }
      element_dofs_[t * nloc + i] = dof;
      const Bary pos{node[0] / double(p), node[1] / double(p), node[2] / double(p)};
      dof_coordinates_[dof] = m.map_to_physical(ti, pos);
    }
  }

  std::vector<char> dirichlet(ndofs, 0);
  for (int e = 0; e < ne; e++)
  {
    if (!m.is_dirichlet_edge(e))
    {
      continue;
    }
    dirichlet[m.edges()[e].first] = 1;
    dirichlet[m.edges()[e].second] = 1;
    for (int k = 0; k < p - 1; k++)
    {
      dirichlet[nv + e * (p - 1) + k] = 1;
    }
  }
  free_index_.assign(ndofs, -1);
  for (int i = 0; i < ndofs; i++)
  {
    if (!dirichlet[i])
    {
      free_index_[i] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(i);
    }
  }
}

DiscreteFunction::DiscreteFunction(std::shared_ptr<const FeSpace> space, Vector coefficients)
  : space_(std::move(space)), coefficients_(std::move(coefficients))
{
  if (coefficients_.size() != space_->num_dofs())
  {
    throw InvalidArgument("coefficient vector length does not match the space dimension");
  }
}

DiscreteFunction DiscreteFunction::zero(std::shared_ptr<const FeSpace> space)
{
  const int n = space->num_dofs();
  return DiscreteFunction(std::move(space), Vector::Zero(n));
}

Jet DiscreteFunction::evaluate(const BasisTable &table, const ElementGeometry &geo, int element,
                               int q) const
{
  const auto dofs = space_->element_dofs(element);
  const int n = table.num_basis;
  std::array<double, 3> dl{0.0, 0.0, 0.0};
  std::array<double, 9> d2{};
  Jet jet;
  for (int i = 0; i < n; i++)
  {
    const double c = coefficients_[dofs[i]];
    jet.value += c * table.values[q * n + i];
    for (int a = 0; a < 3; a++)
    {
      dl[a] += c * table.dlambda[q * n + i][a];
    }
    for (int a = 0; a < 9; a++)
    {
      d2[a] += c * table.d2lambda[q * n + i][a];
    }
  }
  jet.grad = geo.gradient(dl);
  jet.hessian = geo.hessian(d2);
  return jet;
}

ScalarField pointwise(std::function<double(Point)> f)
{
  return [f = std::move(f)](const QuadPoint &qp) { return f(qp.x); };
}

VectorField pointwise_vector(std::function<Vec2(Point)> f)
{
  return [f = std::move(f)](const QuadPoint &qp) { return f(qp.x); };
}

namespace
{

template <typename ElementKernel>
SparseMatrix assemble_matrix(const FeSpace &space, int quadrature_degree, ElementKernel &&kernel)
{
  const Triangulation &mesh = space.mesh();
  const BasisTable &table = basis_table(space.degree(), quadrature_degree);
  const int n = table.num_basis;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_elements() * n * n);
  Eigen::MatrixXd local(n, n);
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(mesh, ti);
    local.setZero();
    kernel(ti, geo, table, local);
    const auto dofs = space.element_dofs(ti);
    for (int i = 0; i < n; i++)
    {
      for (int j = 0; j < n; j++)
      {
        triplets.emplace_back(dofs[i], dofs[j], local(i, j));
      }
    }
  }
  SparseMatrix a(space.num_dofs(), space.num_dofs());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

template <typename ElementKernel>
Vector assemble_vector(const FeSpace &space, int quadrature_degree, ElementKernel &&kernel)
{
  const Triangulation &mesh = space.mesh();
  const BasisTable &table = basis_table(space.degree(), quadrature_degree);
  const int n = table.num_basis;
  Vector b = Vector::Zero(space.num_dofs());
  Eigen::VectorXd local(n);
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(mesh, ti);
    local.setZero();
    kernel(ti, geo, table, local);
    const auto dofs = space.element_dofs(ti);
    for (int i = 0; i < n; i++)
    {
      b[dofs[i]] += local[i];
    }
  }
  return b;
}

}  // namespace

SparseMatrix assemble_stiffness(const FeSpace &space, const StiffnessOptions &options)
{
  const int p = space.degree();
  const int degree = options.quadrature_degree >= 0 ? options.quadrature_degree
                     : options.coefficient      ? 2 * p + 4
                                                : 2 * p;
  const Mat2 &A = options.matrix;
  return assemble_matrix(space, degree,
                         [&](int t, const ElementGeometry &geo, const BasisTable &table,
                             Eigen::MatrixXd &local) {
                           const int n = table.num_basis;
                           std::vector<Vec2> grads(n);
                           for (std::size_t q = 0; q < table.rule->size(); q++)
                           {
                             double w = geo.area * table.rule->weights[q];
                             if (options.coefficient)
                             {
                               const Bary &l = table.rule->points[q];
                               w *= options.coefficient({t, geo.map(l), l});
                             }
                             for (int i = 0; i < n; i++)
                             {
                               grads[i] = geo.gradient(table.dlambda[q * n + i]);
                             }
                             for (int i = 0; i < n; i++)
                             {
                               const Vec2 agi = A * grads[i];
                               for (int j = i; j < n; j++)
                               {
                                 const double v = w * grads[j].dot(agi);
                                 local(j, i) += v;
                                 if (j != i)
                                 {
                                   local(i, j) += v;
                                 }
                               }
                             }
                           }
                         });
}

SparseMatrix assemble_mass_weighted(const FeSpace &space, const ScalarField &weight,
                                    int quadrature_degree)
{
  const int degree = quadrature_degree >= 0 ? quadrature_degree : 2 * space.degree() + 4;
  return assemble_matrix(space, degree,
                         [&](int t, const ElementGeometry &geo, const BasisTable &table,
                             Eigen::MatrixXd &local) {
                           const int n = table.num_basis;
                           for (std::size_t q = 0; q < table.rule->size(); q++)
                           {
                             const Bary &l = table.rule->points[q];
                             const double w =
                                 geo.area * table.rule->weights[q] * weight({t, geo.map(l), l});
                             if (w == 0.0)
                             {
                               continue;
                             }
                             for (int i = 0; i < n; i++)
                             {
                               for (int j = i; j < n; j++)
                               {
                                 const double v =
                                     w * table.values[q * n + i] * table.values[q * n + j];
                                 local(i, j) += v;
                                 if (j != i)
                                 {
                                   local(j, i) += v;
                                 }
                               }
                             }
                           }
                         });
}

Vector assemble_load_scalar(const FeSpace &space, const ScalarField &f, int quadrature_degree)
{
  const int degree = quadrature_degree >= 0 ? quadrature_degree : 2 * space.degree() + 4;
  return assemble_vector(space, degree,
                         [&](int t, const ElementGeometry &geo, const BasisTable &table,
                             Eigen::VectorXd &local) {
                           const int n = table.num_basis;
                           for (std::size_t q = 0; q < table.rule->size(); q++)
                           {
                             const Bary &l = table.rule->points[q];
                             const double w =
                                 geo.area * table.rule->weights[q] * f({t, geo.map(l), l});
                             for (int i = 0; i < n; i++)
                             {
                               local[i] += w * table.values[q * n + i];
                             }
                           }
                         });
}

Vector assemble_load_flux(const FeSpace &space, const VectorField &vf, int quadrature_degree)
{
  return assemble_vector(space, quadrature_degree,
                         [&](int t, const ElementGeometry &geo, const BasisTable &table,
                             Eigen::VectorXd &local) {
                           const int n = table.num_basis;
                           for (std::size_t q = 0; q < table.rule->size(); q++)
                           {
                             const Bary &l = table.rule->points[q];
                             const Vec2 v = geo.area * table.rule->weights[q] *
                                            vf({t, geo.map(l), l});
                             for (int i = 0; i < n; i++)
                             {
                               local[i] += v.dot(geo.gradient(table.dlambda[q * n + i]));
                             }
                           }
                         });
}

Vector assemble_load_gradient(const FeSpace &space, const VectorField &vf)
{
  // grad(phi_i) has degree p - 1, so a rule of degree p - 1 is exact; the constancy check
  // samples the field at the interior points of a richer rule.
  const QuadratureRule &probe = triangle_rule(4);
  const Triangulation &mesh = space.mesh();
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(mesh, ti);
    const Vec2 ref = vf({ti, geo.map(probe.points[0]), probe.points[0]});
    for (const auto &l : probe.points)
    {
      const Vec2 v = vf({ti, geo.map(l), l});
      if ((v - ref).norm() > 1e-14 * (1.0 + ref.norm()))
      {
        throw InvalidArgument("assemble_load_gradient: vector field is not constant on element " +
                              std::to_string(t));
      }
    }
  }
  return assemble_load_flux(space, vf, std::max(0, space.degree() - 1));
}

SparseMatrix restrict_matrix(const FeSpace &space, const SparseMatrix &full)
{
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(full.nonZeros());
  for (int k = 0; k < full.outerSize(); k++)
  {
    for (SparseMatrix::InnerIterator it(full, k); it; ++it)
    {
      const int i = space.free_index(static_cast<int>(it.row()));
      const int j = space.free_index(static_cast<int>(it.col()));
      if (i >= 0 && j >= 0)
      {
        triplets.emplace_back(i, j, it.value());
      }
    }
  }
  SparseMatrix a(space.num_free_dofs(), space.num_free_dofs());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Vector restrict_vector(const FeSpace &space, const Vector &full)
{
  Vector out(space.num_free_dofs());
  for (int i = 0; i < space.num_free_dofs(); i++)
  {
    out[i] = full[space.free_dofs()[i]];
  }
  return out;
}

Vector extend_vector(const FeSpace &space, const Vector &free)
{
  Vector out = Vector::Zero(space.num_dofs());
  for (int i = 0; i < space.num_free_dofs(); i++)
  {
    out[space.free_dofs()[i]] = free[i];
  }
  return out;
}

DiscreteFunction interpolate(std::shared_ptr<const FeSpace> space, std::function<double(Point)> fn)
{
  Vector c(space->num_dofs());
  for (int i = 0; i < space->num_dofs(); i++)
  {
    c[i] = fn(space->dof_coordinates()[i]);
  }
  return DiscreteFunction(std::move(space), std::move(c));
}

DiscreteFunction prolongate(const DiscreteFunction &coarse, std::shared_ptr<const FeSpace> fine,
                            const RefinementMap &map)
{
  const FeSpace &cs = coarse.space();
  const Triangulation &fine_mesh = fine->mesh();
  if (map.parent.size() != fine_mesh.num_elements() || fine->degree() != cs.degree())
  {
    throw InvalidArgument("prolongate: refinement map or degree does not match");
  }
  const LagrangeBasis &basis = cs.basis();
  const int n = basis.size();
  std::vector<double> values(n);
  std::vector<std::array<double, 3>> dl(n);
  std::vector<std::array<double, 9>> d2(n);
  Vector c = Vector::Zero(fine->num_dofs());
  std::vector<char> done(fine->num_dofs(), 0);
  for (std::size_t f = 0; f < fine_mesh.num_elements(); f++)
  {
    const int parent = map.parent[f];
    const ElementGeometry pgeo(cs.mesh(), parent);
    const auto pdofs = cs.element_dofs(parent);
    const auto fdofs = fine->element_dofs(static_cast<int>(f));
    for (int i = 0; i < n; i++)
    {
      if (done[fdofs[i]])
      {
        continue;
      }
      done[fdofs[i]] = 1;
      const Bary l = pgeo.barycentric(fine->dof_coordinates()[fdofs[i]]);
      basis.evaluate(l, values, dl, d2);
      double v = 0.0;
      for (int j = 0; j < n; j++)
      {
        v += coarse.coefficients()[pdofs[j]] * values[j];
      }
      c[fdofs[i]] = v;
    }
  }
  return DiscreteFunction(std::move(fine), std::move(c));
}

ElementValues eval_element(const DiscreteFunction &df, int element, std::span<const Bary> points)
{
  if (!df.space().mesh().check_index(element))
  {
    throw InvalidArgument("eval_element: element index out of range");
  }
  const BasisTable table = tabulate(df.space().basis(), points);
  const ElementGeometry geo(df.space().mesh(), element);
  ElementValues out;
  for (std::size_t q = 0; q < points.size(); q++)
  {
    const Jet j = df.evaluate(table, geo, element, static_cast<int>(q));
    out.values.push_back(j.value);
    out.gradients.push_back(j.grad);
    out.laplacians.push_back(j.laplacian());
  }
  return out;
}

double h1_seminorm_squared(const DiscreteFunction &u, std::span<const int> elements)
{
  const FeSpace &space = u.space();
  const BasisTable &table = basis_table(space.degree(), 2 * space.degree());
  double sum = 0.0;
  auto add = [&](int t) {
    const ElementGeometry geo(space.mesh(), t);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      const Jet j = u.evaluate(table, geo, t, static_cast<int>(q));
      sum += geo.area * table.rule->weights[q] * j.grad.squaredNorm();
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

double integrate_product(const DiscreteFunction &u, const ScalarField &f, int quadrature_degree)
{
  const FeSpace &space = u.space();
  const BasisTable &table = basis_table(space.degree(), quadrature_degree);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.mesh().num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const ElementGeometry geo(space.mesh(), ti);
    for (std::size_t q = 0; q < table.rule->size(); q++)
    {
      const Bary &l = table.rule->points[q];
      const Jet j = u.evaluate(table, geo, ti, static_cast<int>(q));
      sum += geo.area * table.rule->weights[q] * j.value * f({ti, geo.map(l), l});
    }
  }
  return sum;
}

}  // namespace goafem
