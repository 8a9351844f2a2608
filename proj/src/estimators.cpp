#include "goafem/estimators.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "goafem/error.hpp"

namespace goafem
{

IndicatorField IndicatorField::from_squared(std::vector<double> squared)
{
  IndicatorField field;
  long double sum = 0.0L;
  for (double v : squared)
  {
    if (!(v >= 0.0) || !std::isfinite(v))
    {
      throw InvalidArgument("indicator values must be finite and nonnegative");
    }
    sum += v;
  }
  field.squared_ = std::move(squared);
  field.global_squared_ = static_cast<double>(sum);
  return field;
}

IndicatorField IndicatorField::from_values(std::span<const double> values)
{
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); i++)
  {
    if (!(values[i] >= 0.0))
    {
      throw InvalidArgument("indicator values must be nonnegative");
    }
    sq[i] = values[i] * values[i];
  }
  return from_squared(std::move(sq));
}

double IndicatorField::value(int t) const { return std::sqrt(squared_[t]); }

double IndicatorField::global() const { return std::sqrt(global_squared_); }

double IndicatorField::aggregate_squared(std::span<const int> subset) const
{
  long double sum = 0.0L;
  for (int t : subset)
  {
    sum += squared_[t];
  }
  return static_cast<double>(sum);
}

double IndicatorField::aggregate(std::span<const int> subset) const
{
  return std::sqrt(aggregate_squared(subset));
}

IndicatorField estimate_residual(std::span<const DiscreteFunction *const> fields,
                                 const ResidualRecipe &recipe)
{
  if (fields.empty())
  {
    throw InvalidArgument("estimate_residual: no discrete functions given");
  }
  const FeSpace &space = fields[0]->space();
  for (const DiscreteFunction *f : fields)
  {
    if (&f->space().mesh() != &space.mesh() || f->space().degree() != space.degree())
    {
      throw InvalidArgument("estimate_residual: functions live on different spaces");
    }
  }
  const Triangulation &mesh = space.mesh();
  const int p = space.degree();
  const std::size_t nf = fields.size();
  std::vector<double> squared(mesh.num_elements(), 0.0);
  std::vector<Jet> jets(nf);

  if (recipe.volume)
  {
    const BasisTable &table =
        basis_table(p, recipe.volume_degree >= 0 ? recipe.volume_degree : 2 * p + 4);
    for (std::size_t t = 0; t < mesh.num_elements(); t++)
    {
      const int ti = static_cast<int>(t);
      const ElementGeometry geo(mesh, ti);
      const Point c = mesh.centroid(ti);
      double integral = 0.0;
      for (std::size_t q = 0; q < table.rule->size(); q++)
      {
        for (std::size_t k = 0; k < nf; k++)
        {
          jets[k] = fields[k]->evaluate(table, geo, ti, static_cast<int>(q));
        }
        const Bary &l = table.rule->points[q];
        const double r = recipe.volume({{ti, geo.map(l), l}, c, jets});
        integral += table.rule->weights[q] * r * r;
      }
      // h_T^2 * |T| * mean = |T|^2 * mean
      squared[t] += geo.area * geo.area * integral;
    }
  }

  if (recipe.flux)
  {
    const LineRule rule = line_rule(recipe.edge_degree >= 0 ? recipe.edge_degree : 2 * p);
    const LagrangeBasis &basis = space.basis();
    const int n = basis.size();
    std::vector<double> values(n);
    std::vector<std::array<double, 3>> dl(n);
    std::vector<std::array<double, 9>> d2(n);

    auto side_flux = [&](int t, int va, int vb, double s, Point x) {
      const auto &tri = mesh.triangle(t);
      Bary l{0.0, 0.0, 0.0};
      for (int k = 0; k < 3; k++)
      {
        if (tri[k] == va)
        {
          l[k] = 1.0 - s;
        }
        else if (tri[k] == vb)
        {
          l[k] = s;
        }
      }
      basis.evaluate(l, values, dl, d2);
      const ElementGeometry geo(mesh, t);
      for (std::size_t k = 0; k < nf; k++)
      {
        const auto dofs = fields[k]->space().element_dofs(t);
        std::array<double, 3> g{0.0, 0.0, 0.0};
        std::array<double, 9> h{};
        double v = 0.0;
        for (int i = 0; i < n; i++)
        {
          const double c = fields[k]->coefficients()[dofs[i]];
          v += c * values[i];
          for (int a = 0; a < 3; a++)
          {
            g[a] += c * dl[i][a];
          }
          for (int a = 0; a < 9; a++)
          {
            h[a] += c * d2[i][a];
          }
        }
        jets[k].value = v;
        jets[k].grad = geo.gradient(g);
        jets[k].hessian = geo.hessian(h);
      }
      return recipe.flux({{t, x, l}, mesh.centroid(t), jets});
    };

    for (std::size_t e = 0; e < mesh.num_edges(); e++)
    {
      const int ei = static_cast<int>(e);
      if (mesh.is_boundary_edge(ei))
      {
        continue;
      }
      const auto [t0, t1] = mesh.edge_elements(ei);
      const auto &[va, vb] = mesh.edges()[e];
      const Point pa = mesh.vertex(va), pb = mesh.vertex(vb);
      const Point d = pb - pa;
      const double len = norm(d);
      Vec2 normal(d.y / len, -d.x / len);
      // Orient outward from t0.
      const Point c0 = mesh.centroid(t0);
      if (normal.x() * (c0.x - pa.x) + normal.y() * (c0.y - pa.y) > 0.0)
      {
        normal = -normal;
      }
      double integral = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); q++)
      {
        const double s = rule.points[q];
        const Point x = (1.0 - s) * pa + s * pb;
        const double jump = (side_flux(t0, va, vb, s, x) - side_flux(t1, va, vb, s, x)).dot(normal);
        integral += rule.weights[q] * jump * jump;
      }
      integral *= len;
      squared[t0] += std::sqrt(mesh.area(t0)) * integral;
      squared[t1] += std::sqrt(mesh.area(t1)) * integral;
    }
  }
  return IndicatorField::from_squared(std::move(squared));
}

IndicatorField estimate_poisson(const DiscreteFunction &u, const ScalarField &f,
                                bool f_is_polynomial)
{
  const int p = u.space().degree();
  ResidualRecipe recipe;
  recipe.volume = [&f](const ResidualPoint &rp) {
    return rp.fields[0].laplacian() + f(rp.point);
  };
  recipe.flux = [](const ResidualPoint &rp) { return rp.fields[0].grad; };
  recipe.volume_degree = f_is_polynomial ? 2 * p : 2 * p + 4;
  const DiscreteFunction *fields[] = {&u};
  return estimate_residual(fields, recipe);
}

CombinedIndicators combine(const IndicatorField &mu, const IndicatorField &nu, Combination mode)
{
  if (mu.size() != nu.size())
  {
    throw InvalidArgument("combine: indicator fields live on different meshes");
  }
  if (mode == Combination::separate)
  {
    return {mu, nu};
  }
  std::vector<double> sum(mu.size());
  for (std::size_t t = 0; t < mu.size(); t++)
  {
    sum[t] = mu.squared(static_cast<int>(t)) + nu.squared(static_cast<int>(t));
  }
  IndicatorField both = IndicatorField::from_squared(std::move(sum));
  if (mode == Combination::product_form)
  {
    return {mu, both};
  }
  return {both, both};
}

IndicatorField weighted_indicator(const IndicatorField &eta, const IndicatorField &zeta)
{
  if (eta.size() != zeta.size())
  {
    throw InvalidArgument("weighted_indicator: indicator fields live on different meshes");
  }
  const double eta2 = eta.global_squared();
  const double zeta2 = zeta.global_squared();
  std::vector<double> rho(eta.size());
  for (std::size_t t = 0; t < eta.size(); t++)
  {
    const int ti = static_cast<int>(t);
    rho[t] = eta.squared(ti) * zeta2 + eta2 * zeta.squared(ti);
  }
  return IndicatorField::from_squared(std::move(rho));
}

double OscillationField::total_squared() const
{
  long double sum = 0.0L;
  for (double v : squared)
  {
    sum += v;
  }
  return static_cast<double>(sum);
}

double OscillationField::patch_squared(std::span<const int> elements) const
{
  long double sum = 0.0L;
  for (int t : elements)
  {
    sum += squared[t];
  }
  return static_cast<double>(sum);
}

OscillationField oscillation(const Triangulation &mesh, const ScalarField &data, int q)
{
  if (q < 0)
  {
    throw InvalidArgument("oscillation: projection degree must be nonnegative");
  }
  const QuadratureRule &rule = triangle_rule(2 * q + 10);
  // Monomials lambda_1^i lambda_2^j, i + j <= q, span P_q.
  std::vector<std::pair<int, int>> monomials;
  for (int i = 0; i <= q; i++)
  {
    for (int j = 0; i + j <= q; j++)
    {
      monomials.emplace_back(i, j);
    }
  }
  const int m = static_cast<int>(monomials.size());
  const int nq = static_cast<int>(rule.size());
  Eigen::MatrixXd basis(nq, m);
  for (int k = 0; k < nq; k++)
  {
    for (int b = 0; b < m; b++)
    {
      basis(k, b) = std::pow(rule.points[k][1], monomials[b].first) *
                    std::pow(rule.points[k][2], monomials[b].second);
    }
  }
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), nq);
  const Eigen::MatrixXd gram = basis.transpose() * w.asDiagonal() * basis;
  const Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);

  OscillationField osc;
  osc.squared.resize(mesh.num_elements());
  Eigen::VectorXd d(nq);
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    for (int k = 0; k < nq; k++)
    {
      d[k] = data({ti, mesh.map_to_physical(ti, rule.points[k]), rule.points[k]});
    }
    const Eigen::VectorXd coeff = gram_ldlt.solve(basis.transpose() * w.cwiseProduct(d));
    const Eigen::VectorXd r = d - basis * coeff;
    const double area = mesh.area(ti);
    // |T|^{2/d} ||r||^2 with ||r||^2 = |T| sum w r^2
    osc.squared[t] = area * area * w.dot(r.cwiseProduct(r));
  }
  return osc;
}

}  // namespace goafem
