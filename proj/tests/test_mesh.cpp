#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "goafem/error.hpp"
#include "goafem/mesh.hpp"

using namespace goafem;

namespace
{

// Independent bisection simulator working on coordinates only. A triangle is
// (newest, r1, r2); bisection splits r1-r2 at its midpoint.
using GeoTri = std::array<Point, 3>;

Point mid(Point a, Point b) { return 0.5 * (a + b); }

std::pair<GeoTri, GeoTri> bisect(const GeoTri &t)
{
  const Point m = mid(t[1], t[2]);
  return {GeoTri{m, t[0], t[1]}, GeoTri{m, t[2], t[0]}};
}

// Bisects every triangle that has some vertex of the mesh at the midpoint of one of its
// edges, until no hanging node remains. Only midpoints can occur under bisection.
std::vector<GeoTri> close(std::vector<GeoTri> tris)
{
  for (;;)
  {
    std::set<std::pair<double, double>> pts;
    for (const auto &t : tris)
    {
      for (const auto &p : t)
      {
        pts.insert({p.x, p.y});
      }
    }
    std::vector<GeoTri> next;
    bool changed = false;
    for (const auto &t : tris)
    {
      bool hanging = false;
      for (int k = 0; k < 3; k++)
      {
        const Point m = mid(t[(k + 1) % 3], t[(k + 2) % 3]);
        hanging = hanging || pts.count({m.x, m.y});
      }
      if (hanging)
      {
        auto [a, b] = bisect(t);
        next.push_back(a);
        next.push_back(b);
        changed = true;
      }
      else
      {
        next.push_back(t);
      }
    }
    tris = std::move(next);
    if (!changed)
    {
      return tris;
    }
  }
}

std::vector<GeoTri> geometric(const Triangulation &mesh)
{
  std::vector<GeoTri> out;
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const auto &tri = mesh.triangle(static_cast<int>(t));
    out.push_back({mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2])});
  }
  return out;
}

// Canonical form for comparing triangle sets irrespective of order and vertex rotation.
std::multiset<std::vector<std::pair<double, double>>> canonical(const std::vector<GeoTri> &tris)
{
  std::multiset<std::vector<std::pair<double, double>>> out;
  for (const auto &t : tris)
  {
    std::vector<std::pair<double, double>> v{{t[0].x, t[0].y}, {t[1].x, t[1].y}, {t[2].x, t[2].y}};
    std::sort(v.begin(), v.end());
    out.insert(v);
  }
  return out;
}

bool closures_intersect(const GeoTri &a, const GeoTri &b)
{
  // Conforming mesh: closed triangles meet iff they share a vertex position.
  for (const auto &p : a)
  {
    for (const auto &q : b)
    {
      if (p == q)
      {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_CASE("refining one triangle of the square bisects its neighbour too")
{
  const Triangulation square = unit_square_mesh();
  const Triangulation fine = refine_nvb(square, MarkedSet({0}, 2));
  CHECK(fine.num_elements() == 4);
  CHECK(fine.num_vertices() == 5);
  CHECK(diagnose(fine).conforming);
  const RefinementMap map = is_refinement_of(fine, square);
  CHECK(map.num_refined() == 2);
  CHECK(map.num_inherited() == 0);
}

TEST_CASE("empty marking returns the same mesh")
{
  const Triangulation mesh = uniform_refine(lshape_mesh(), 3);
  const Triangulation same = refine_nvb(mesh, MarkedSet({}, mesh.num_elements()));
  CHECK(same.num_elements() == mesh.num_elements());
  CHECK(canonical(geometric(same)) == canonical(geometric(mesh)));
  const RefinementMap map = is_refinement_of(same, mesh);
  CHECK(map.num_new() == 0);
  CHECK(map.num_inherited() == mesh.num_elements());
}

TEST_CASE("three bisections per element agree with the reference simulator")
{
  const Triangulation square = unit_square_mesh();
  const Triangulation fine = refine_nvb(square, MarkedSet({0, 1}, 2), 3);

  std::vector<GeoTri> ref;
  for (const auto &t : geometric(square))
  {
    auto [a, b] = bisect(t);
    for (const auto &c : {a, b})
    {
      auto [c1, c2] = bisect(c);
      ref.push_back(c1);
      ref.push_back(c2);
    }
  }
  ref = close(ref);
  CHECK(fine.num_elements() == ref.size());
  CHECK(canonical(geometric(fine)) == canonical(ref));

  // Every edge of the original mesh carries its midpoint as a vertex.
  for (const auto &e : square.edges())
  {
    const Point m = mid(square.vertex(e.first), square.vertex(e.second));
    const auto v = fine.vertices();
    CHECK(std::find(v.begin(), v.end(), m) != v.end());
  }
}

TEST_CASE("random refinements agree with the reference simulator")
{
  std::mt19937_64 rng(7);
  Triangulation mesh = lshape_mesh();
  std::vector<GeoTri> ref = geometric(mesh);
  for (int step = 0; step < 12; step++)
  {
    std::vector<int> marked;
    for (std::size_t t = 0; t < mesh.num_elements(); t++)
    {
      if (rng() % 5 == 0)
      {
        marked.push_back(static_cast<int>(t));
      }
    }
    std::vector<GeoTri> next;
    for (std::size_t t = 0; t < ref.size(); t++)
    {
      // ref and mesh are kept in the same element order by construction below.
      if (std::binary_search(marked.begin(), marked.end(), static_cast<int>(t)))
      {
        auto [a, b] = bisect(ref[t]);
        next.push_back(a);
        next.push_back(b);
      }
      else
      {
        next.push_back(ref[t]);
      }
    }
    mesh = refine_nvb(mesh, MarkedSet(marked, mesh.num_elements()));
    REQUIRE(canonical(geometric(mesh)) == canonical(close(next)));
    ref = geometric(mesh);
  }
  const MeshDiagnostics d = diagnose(mesh);
  CHECK(d.conforming);
  CHECK(d.positive_orientation);
  CHECK(d.total_area == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("uniform refinement doubles the element count per level")
{
  const Triangulation square = unit_square_mesh();
  CHECK(uniform_refine(square, 0).num_elements() == 2);
  CHECK(uniform_refine(square, 1).num_elements() == 4);
  CHECK(uniform_refine(square, 3).num_elements() == 16);
  const Triangulation once = uniform_refine(square, 1);
  const RefinementMap map = is_refinement_of(once, square);
  CHECK(map.num_inherited() == 0);
  CHECK(map.num_new() == 4);
  CHECK(map.num_refined() == 2);
}

TEST_CASE("patches match an all-pairs scan")
{
  const Triangulation square = unit_square_mesh();
  CHECK(patch_of(square, 0).members == std::vector<int>{0, 1});

  const Triangulation mesh = uniform_refine(square, 3);
  const auto geo = geometric(mesh);
  std::size_t min_size = 100, max_size = 0;
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    std::vector<int> scan;
    for (std::size_t s = 0; s < mesh.num_elements(); s++)
    {
      if (closures_intersect(geo[t], geo[s]))
      {
        scan.push_back(static_cast<int>(s));
      }
    }
    const Patch p = patch_of(mesh, static_cast<int>(t));
    CHECK(p.members == scan);
    min_size = std::min(min_size, scan.size());
    max_size = std::max(max_size, scan.size());
  }
  // Corner elements have strictly smaller patches than interior ones.
  CHECK(min_size < max_size);
}

TEST_CASE("is_refinement_of")
{
  const Triangulation mesh = uniform_refine(unit_square_mesh(), 2);
  const RefinementMap self = is_refinement_of(mesh, mesh);
  CHECK(self.num_inherited() == mesh.num_elements());
  CHECK(self.num_new() == 0);
  CHECK_THROWS_AS(is_refinement_of(unit_square_mesh(), mesh), InvalidArgument);
}

TEST_CASE("mesh text format round trip")
{
  const Triangulation mesh = refine_nvb(lshape_mesh(), MarkedSet({0, 3}, 6));
  std::stringstream s;
  write_mesh(s, mesh);
  const Triangulation back = read_mesh(s);
  CHECK(back.num_elements() == mesh.num_elements());
  CHECK(canonical(geometric(back)) == canonical(geometric(mesh)));
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    CHECK(back.triangle(static_cast<int>(t)) == mesh.triangle(static_cast<int>(t)));
  }
  std::stringstream bad("v 0 0\nv 1 0\nt 0 1 2\n");
  CHECK_THROWS(read_mesh(bad));
}

TEST_CASE("marked set validation")
{
  CHECK_THROWS_AS(MarkedSet({0, 0}, 3), InvalidArgument);
  CHECK_THROWS_AS(MarkedSet({3}, 3), InvalidArgument);
  const MarkedSet m({2, 0}, 3);
  CHECK(m.contains(0));
  CHECK_FALSE(m.contains(1));
  CHECK(m.elements()[0] == 0);
}
