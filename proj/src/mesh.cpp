#include "goafem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "goafem/error.hpp"

namespace goafem
{

double norm(Point a) { return std::hypot(a.x, a.y); }

namespace
{

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

}  // namespace

Triangulation::Triangulation(std::vector<Point> vertices, std::vector<Triangle> triangles,
                             std::vector<Edge> dirichlet_edges, std::vector<int> generation)
  : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
    generation_(std::move(generation))
{
  const int nv = static_cast<int>(vertices_.size());
  if (generation_.empty())
  {
    generation_.assign(triangles_.size(), 0);
  }
  if (generation_.size() != triangles_.size())
  {
    throw InvalidArgument("generation list length does not match triangle count");
  }
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    for (int v : triangles_[t])
    {
      if (v < 0 || v >= nv)
      {
        throw InvalidArgument("triangle " + std::to_string(t) + " references vertex " +
                              std::to_string(v) + " out of range");
      }
    }
    const auto &[a, b, c] = triangles_[t];
    if (!(signed_area(vertices_[a], vertices_[b], vertices_[c]) > 1e-14))
    {
      throw InvalidArgument("triangle " + std::to_string(t) +
                            " is degenerate or clockwise oriented");
    }
  }

  // Edges, sorted lexicographically.
  std::vector<std::pair<Edge, int>> half;  // (edge, element * 3 + local)
  half.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    const auto &tri = triangles_[t];
    for (int k = 0; k < 3; k++)
    {
      half.emplace_back(make_edge(tri[(k + 1) % 3], tri[(k + 2) % 3]),
                        static_cast<int>(3 * t + k));
    }
  }
  std::sort(half.begin(), half.end());
  element_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();)
  {
    std::size_t j = i;
    while (j < half.size() && half[j].first == half[i].first)
    {
      j++;
    }
    if (j - i > 2)
    {
      throw InvalidArgument("edge (" + std::to_string(half[i].first.first) + "," +
                            std::to_string(half[i].first.second) +
                            ") is shared by more than two triangles");
    }
    const int e = static_cast<int>(edges_.size());
    edges_.push_back(half[i].first);
    std::array<int, 2> adj{-1, -1};
    for (std::size_t k = i; k < j; k++)
    {
      const int t = half[k].second / 3;
      adj[k - i] = t;
      element_edges_[t][half[k].second % 3] = e;
    }
    edge_elements_.push_back(adj);
    i = j;
  }

  dirichlet_.assign(edges_.size(), 0);
  for (const auto &[a, b] : dirichlet_edges)
  {
    const int e = edge_id(a, b);
    if (e < 0 || !is_boundary_edge(e))
    {
      throw InvalidArgument("Dirichlet edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") is not a boundary edge of the triangulation");
    }
    dirichlet_[e] = 1;
  }

  // Vertex -> element adjacency (CSR).
  vertex_elements_offsets_.assign(nv + 1, 0);
  for (const auto &tri : triangles_)
  {
    for (int v : tri)
    {
      vertex_elements_offsets_[v + 1]++;
    }
  }
  std::partial_sum(vertex_elements_offsets_.begin(), vertex_elements_offsets_.end(),
                   vertex_elements_offsets_.begin());
  vertex_elements_.resize(vertex_elements_offsets_.back());
  std::vector<int> fill(vertex_elements_offsets_.begin(), vertex_elements_offsets_.end() - 1);
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    for (int v : triangles_[t])
    {
      vertex_elements_[fill[v]++] = static_cast<int>(t);
    }
  }

  // Every boundary edge carries a Dirichlet flag; anything else is a hanging node or a
  // hole in the element list.
  for (std::size_t e = 0; e < edges_.size(); e++)
  {
    if (is_boundary_edge(static_cast<int>(e)) && !dirichlet_[e])
    {
      throw InvalidArgument("edge (" + std::to_string(edges_[e].first) + "," +
                            std::to_string(edges_[e].second) +
                            ") has one adjacent triangle but is not flagged as boundary");
    }
  }
}

Triangulation Triangulation::with_longest_edge_refinement(std::vector<Point> vertices,
                                                          std::vector<Triangle> triangles,
                                                          std::vector<Edge> dirichlet_edges)
{
  for (auto &tri : triangles)
  {
    // Orientation first, then rotate (cyclic, keeps orientation).
    if (signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0)
    {
      std::swap(tri[1], tri[2]);
    }
    int best = 0;
    double best_len = -1.0;
    Edge best_edge{};
    for (int k = 0; k < 3; k++)
    {
      const int a = tri[(k + 1) % 3];
      const int b = tri[(k + 2) % 3];
      const double len = norm(vertices[a] - vertices[b]);
      const Edge e = make_edge(a, b);
      // Lengths compared with a relative tolerance so that symmetric meshes tie exactly.
      const bool longer = len > best_len * (1.0 + 1e-12);
      const bool tie = !longer && len >= best_len * (1.0 - 1e-12);
      if (longer || (tie && e < best_edge))
      {
        best = k;
        best_len = len;
        best_edge = e;
      }
    }
    std::rotate(tri.begin(), tri.begin() + best, tri.end());
  }
  return Triangulation(std::move(vertices), std::move(triangles), std::move(dirichlet_edges));
}

int Triangulation::edge_id(int a, int b) const
{
  const Edge e = make_edge(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it == edges_.end() || *it != e)
  {
    return -1;
  }
  return static_cast<int>(it - edges_.begin());
}

std::vector<Edge> Triangulation::dirichlet_edges() const
{
  std::vector<Edge> out;
  for (std::size_t e = 0; e < edges_.size(); e++)
  {
    if (dirichlet_[e])
    {
      out.push_back(edges_[e]);
    }
  }
  return out;
}

std::span<const int> Triangulation::vertex_elements(int v) const
{
  return std::span<const int>(vertex_elements_)
      .subspan(vertex_elements_offsets_[v],
               vertex_elements_offsets_[v + 1] - vertex_elements_offsets_[v]);
}

double Triangulation::area(int t) const
{
  const auto &[a, b, c] = triangles_[t];
  return signed_area(vertices_[a], vertices_[b], vertices_[c]);
}

double Triangulation::total_area() const
{
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    sum += area(static_cast<int>(t));
  }
  return sum;
}

double Triangulation::diameter(int t) const
{
  const auto &[a, b, c] = triangles_[t];
  return std::max({norm(vertices_[a] - vertices_[b]), norm(vertices_[b] - vertices_[c]),
                   norm(vertices_[c] - vertices_[a])});
}

Point Triangulation::centroid(int t) const
{
  const auto &[a, b, c] = triangles_[t];
  return (1.0 / 3.0) * (vertices_[a] + vertices_[b] + vertices_[c]);
}

Point Triangulation::map_to_physical(int t, const std::array<double, 3> &bary) const
{
  const auto &[a, b, c] = triangles_[t];
  return bary[0] * vertices_[a] + bary[1] * vertices_[b] + bary[2] * vertices_[c];
}

MarkedSet::MarkedSet(std::vector<int> elements, std::size_t num_elements)
  : elements_(std::move(elements))
{
  std::sort(elements_.begin(), elements_.end());
  if (std::adjacent_find(elements_.begin(), elements_.end()) != elements_.end())
  {
    throw InvalidArgument("marked set contains duplicate elements");
  }
  if (!elements_.empty() &&
      (elements_.front() < 0 || elements_.back() >= static_cast<int>(num_elements)))
  {
    throw InvalidArgument("marked element index out of range");
  }
}

bool MarkedSet::contains(int t) const
{
  return std::binary_search(elements_.begin(), elements_.end(), t);
}

std::size_t RefinementMap::num_inherited() const
{
  return static_cast<std::size_t>(std::count(inherited.begin(), inherited.end(), 1));
}

std::size_t RefinementMap::num_refined() const
{
  return static_cast<std::size_t>(std::count(refined.begin(), refined.end(), 1));
}

Triangulation refine_nvb(const Triangulation &mesh, const MarkedSet &marked,
                         int bisections_per_marked)
{
  if (bisections_per_marked != 1 && bisections_per_marked != 3)
  {
    throw InvalidArgument("bisections_per_marked must be 1 or 3");
  }
  if (!marked.empty() && marked.elements().back() >= static_cast<int>(mesh.num_elements()))
  {
    throw InvalidArgument("marked element index out of range");
  }

  const std::size_t ne = mesh.num_elements();
  std::vector<char> edge_marked(mesh.num_edges(), 0);
  for (int t : marked.elements())
  {
    const auto &edges = mesh.element_edges(t);
    edge_marked[edges[0]] = 1;  // refinement edge
    if (bisections_per_marked == 3)
    {
      edge_marked[edges[1]] = 1;
      edge_marked[edges[2]] = 1;
    }
  }

  // Closure: an element with a bisected edge must bisect its refinement edge too.
  for (bool changed = true; changed;)
  {
    changed = false;
    for (std::size_t t = 0; t < ne; t++)
    {
      const auto &edges = mesh.element_edges(static_cast<int>(t));
      if (!edge_marked[edges[0]] && (edge_marked[edges[1]] || edge_marked[edges[2]]))
      {
        edge_marked[edges[0]] = 1;
        changed = true;
      }
    }
  }

  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<int> midpoint(mesh.num_edges(), -1);
  for (std::size_t e = 0; e < mesh.num_edges(); e++)
  {
    if (edge_marked[e])
    {
      const auto &[a, b] = mesh.edges()[e];
      midpoint[e] = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
    }
  }

  auto mid_of = [&](int a, int b) {
    const int e = mesh.edge_id(a, b);
    return e >= 0 ? midpoint[e] : -1;
  };

  std::vector<Triangle> triangles;
  std::vector<int> generation;
  triangles.reserve(2 * ne);
  generation.reserve(2 * ne);
  // Bisect (newest, r1, r2) across (r1, r2) while the edge carries a midpoint. Edges created
  // inside the parent are never marked, so the recursion ends after three levels.
  auto bisect = [&](auto &&self, const Triangle &tri, int gen) -> void {
    const int m = mid_of(tri[1], tri[2]);
    if (m < 0)
    {
      triangles.push_back(tri);
      generation.push_back(gen);
      return;
    }
    self(self, Triangle{m, tri[0], tri[1]}, gen + 1);
    self(self, Triangle{m, tri[2], tri[0]}, gen + 1);
  };
  for (std::size_t t = 0; t < ne; t++)
  {
    bisect(bisect, mesh.triangle(static_cast<int>(t)), mesh.generation()[t]);
  }

  std::vector<Edge> dirichlet;
  for (std::size_t e = 0; e < mesh.num_edges(); e++)
  {
    if (!mesh.is_dirichlet_edge(static_cast<int>(e)))
    {
      continue;
    }
    const auto &[a, b] = mesh.edges()[e];
    if (midpoint[e] >= 0)
    {
      dirichlet.emplace_back(make_edge(a, midpoint[e]));
      dirichlet.emplace_back(make_edge(midpoint[e], b));
    }
    else
    {
      dirichlet.emplace_back(a, b);
    }
  }
  return Triangulation(std::move(vertices), std::move(triangles), std::move(dirichlet),
                       std::move(generation));
}

Triangulation uniform_refine(const Triangulation &mesh, int levels)
{
  if (levels < 0)
  {
    throw InvalidArgument("uniform_refine: levels must be nonnegative");
  }
  Triangulation out = mesh;
  for (int l = 0; l < levels; l++)
  {
    std::vector<int> all(out.num_elements());
    std::iota(all.begin(), all.end(), 0);
    out = refine_nvb(out, MarkedSet(std::move(all), out.num_elements()));
  }
  return out;
}

Patch patch_of(const Triangulation &mesh, int element)
{
  if (!mesh.check_index(element))
  {
    throw InvalidArgument("patch_of: element index out of range");
  }
  Patch patch;
  patch.center = element;
  for (int v : mesh.triangle(element))
  {
    for (int t : mesh.vertex_elements(v))
    {
      patch.members.push_back(t);
    }
  }
  std::sort(patch.members.begin(), patch.members.end());
  patch.members.erase(std::unique(patch.members.begin(), patch.members.end()),
                      patch.members.end());
  for (int t : patch.members)
  {
    patch.area += mesh.area(t);
  }
  return patch;
}

namespace
{

// Uniform bucket grid over element bounding boxes.
class ElementLocator
{
public:
  explicit ElementLocator(const Triangulation &mesh) : mesh_(mesh)
  {
    lo_ = hi_ = mesh.vertex(0);
    for (const auto &p : mesh.vertices())
    {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
    n_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_elements()))));
    cell_ = {(hi_.x - lo_.x) / n_, (hi_.y - lo_.y) / n_};
    buckets_.resize(static_cast<std::size_t>(n_) * n_);
    for (std::size_t t = 0; t < mesh.num_elements(); t++)
    {
      Point blo = mesh.vertex(mesh.triangle(static_cast<int>(t))[0]), bhi = blo;
      for (int v : mesh.triangle(static_cast<int>(t)))
      {
        const Point &p = mesh.vertex(v);
        blo = {std::min(blo.x, p.x), std::min(blo.y, p.y)};
        bhi = {std::max(bhi.x, p.x), std::max(bhi.y, p.y)};
      }
      const auto [i0, j0] = cell_of(blo);
      const auto [i1, j1] = cell_of(bhi);
      for (int i = i0; i <= i1; i++)
      {
        for (int j = j0; j <= j1; j++)
        {
          buckets_[static_cast<std::size_t>(i) * n_ + j].push_back(static_cast<int>(t));
        }
      }
    }
  }

  std::span<const int> candidates(Point p) const
  {
    const auto [i, j] = cell_of(p);
    return buckets_[static_cast<std::size_t>(i) * n_ + j];
  }

private:
  std::pair<int, int> cell_of(Point p) const
  {
    auto idx = [this](double v, double lo, double h) {
      const int k = h > 0.0 ? static_cast<int>(std::floor((v - lo) / h)) : 0;
      return std::clamp(k, 0, n_ - 1);
    };
    return {idx(p.x, lo_.x, cell_.x), idx(p.y, lo_.y, cell_.y)};
  }

  const Triangulation &mesh_;
  Point lo_, hi_, cell_;
  int n_ = 1;
  std::vector<std::vector<int>> buckets_;
};

bool contains_point(const Triangulation &mesh, int t, Point p)
{
  const auto &[a, b, c] = mesh.triangle(t);
  const Point &pa = mesh.vertex(a), &pb = mesh.vertex(b), &pc = mesh.vertex(c);
  const double tol = 1e-12 * mesh.area(t);
  return signed_area(pa, pb, p) >= -tol && signed_area(pb, pc, p) >= -tol &&
         signed_area(pc, pa, p) >= -tol;
}

}  // namespace

RefinementMap is_refinement_of(const Triangulation &fine, const Triangulation &coarse)
{
  RefinementMap map;
  map.parent.assign(fine.num_elements(), -1);
  map.inherited.assign(fine.num_elements(), 0);
  map.children.assign(coarse.num_elements(), {});
  map.refined.assign(coarse.num_elements(), 1);

  const ElementLocator locator(coarse);
  for (std::size_t f = 0; f < fine.num_elements(); f++)
  {
    const int fi = static_cast<int>(f);
    const Point c = fine.centroid(fi);
    for (int t : locator.candidates(c))
    {
      if (!contains_point(coarse, t, c))
      {
        continue;
      }
      bool inside = true;
      for (int v : fine.triangle(fi))
      {
        inside = inside && contains_point(coarse, t, fine.vertex(v));
      }
      if (!inside)
      {
        continue;
      }
      map.parent[f] = t;
      break;
    }
    if (map.parent[f] < 0)
    {
      throw InvalidArgument("is_refinement_of: fine element " + std::to_string(f) +
                            " is not contained in any coarse element");
    }
    const int t = map.parent[f];
    map.children[t].push_back(fi);
    std::array<Point, 3> pf, pc;
    for (int k = 0; k < 3; k++)
    {
      pf[k] = fine.vertex(fine.triangle(fi)[k]);
      pc[k] = coarse.vertex(coarse.triangle(t)[k]);
    }
    auto less = [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); };
    std::sort(pf.begin(), pf.end(), less);
    std::sort(pc.begin(), pc.end(), less);
    if (pf == pc)
    {
      map.inherited[f] = 1;
      map.refined[t] = 0;
    }
  }
  for (std::size_t t = 0; t < coarse.num_elements(); t++)
  {
    double sum = 0.0;
    for (int f : map.children[t])
    {
      sum += fine.area(f);
    }
    const double a = coarse.area(static_cast<int>(t));
    if (std::abs(sum - a) > 1e-12 * a)
    {
      throw InvalidArgument("is_refinement_of: children of coarse element " +
                            std::to_string(t) + " do not cover it");
    }
  }
  return map;
}

MeshDiagnostics diagnose(const Triangulation &mesh)
{
  MeshDiagnostics d;
  d.min_area = mesh.num_elements() ? mesh.area(0) : 0.0;
  for (std::size_t t = 0; t < mesh.num_elements(); t++)
  {
    const int ti = static_cast<int>(t);
    const double a = mesh.area(ti);
    d.positive_orientation = d.positive_orientation && a > 0.0;
    d.min_area = std::min(d.min_area, a);
    d.total_area += a;
    d.max_shape_ratio = std::max(d.max_shape_ratio, mesh.diameter(ti) / std::sqrt(a));
    const Patch p = patch_of(mesh, ti);
    d.max_patch_size = std::max(d.max_patch_size, p.members.size());
    double amin = a, amax = a;
    for (int m : p.members)
    {
      amin = std::min(amin, mesh.area(m));
      amax = std::max(amax, mesh.area(m));
    }
    d.max_patch_area_ratio = std::max(d.max_patch_area_ratio, amax / amin);
  }

  // Hanging node: a vertex m strictly inside a boundary edge (a,b) whose halves are also
  // boundary edges.
  std::vector<std::vector<int>> boundary_nbrs(mesh.num_vertices());
  for (std::size_t e = 0; e < mesh.num_edges(); e++)
  {
    if (mesh.is_boundary_edge(static_cast<int>(e)))
    {
      const auto &[a, b] = mesh.edges()[e];
      boundary_nbrs[a].push_back(b);
      boundary_nbrs[b].push_back(a);
    }
  }
  for (std::size_t m = 0; m < mesh.num_vertices(); m++)
  {
    const auto &nb = boundary_nbrs[m];
    for (std::size_t i = 0; i < nb.size(); i++)
    {
      for (std::size_t j = i + 1; j < nb.size(); j++)
      {
        const int e = mesh.edge_id(nb[i], nb[j]);
        if (e < 0 || !mesh.is_boundary_edge(e))
        {
          continue;
        }
        const Point pa = mesh.vertex(nb[i]), pb = mesh.vertex(nb[j]);
        const Point pm = mesh.vertex(static_cast<int>(m));
        if (std::abs(cross(pb - pa, pm - pa)) <= 1e-14 * dot(pb - pa, pb - pa))
        {
          d.conforming = false;
        }
      }
    }
  }
  return d;
}

Triangulation unit_square_mesh()
{
  std::vector<Point> v{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  std::vector<Triangle> t{{0, 1, 2}, {0, 2, 3}};
  std::vector<Edge> b{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  return Triangulation::with_longest_edge_refinement(std::move(v), std::move(t), std::move(b));
}

Triangulation lshape_mesh()
{
  //  6---5---4
  //  |  /|  /|
  //  | / | / |
  //  7---0---3
  //      |  /|
  //      | / |
  //      1---2
  std::vector<Point> v{{0.0, 0.0},  {0.0, -1.0}, {1.0, -1.0}, {1.0, 0.0},
                       {1.0, 1.0},  {0.0, 1.0},  {-1.0, 1.0}, {-1.0, 0.0}};
  std::vector<Triangle> t{{1, 2, 3}, {1, 3, 0}, {0, 3, 4}, {0, 4, 5}, {7, 0, 5}, {7, 5, 6}};
  std::vector<Edge> b{{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}, {0, 1}};
  return Triangulation::with_longest_edge_refinement(std::move(v), std::move(t), std::move(b));
}

Triangulation read_mesh(std::istream &in)
{
  std::vector<Point> v;
  std::vector<Triangle> t;
  std::vector<Edge> b;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    lineno++;
    if (const auto hash = line.find('#'); hash != std::string::npos)
    {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag))
    {
      continue;
    }
    bool ok = true;
    if (tag == "v")
    {
      Point p;
      ok = static_cast<bool>(ls >> p.x >> p.y);
      v.push_back(p);
    }
    else if (tag == "t")
    {
      Triangle tri;
      ok = static_cast<bool>(ls >> tri[0] >> tri[1] >> tri[2]);
      t.push_back(tri);
    }
    else if (tag == "b")
    {
      int i = 0, j = 0;
      ok = static_cast<bool>(ls >> i >> j);
      b.push_back(make_edge(i, j));
    }
    else
    {
      ok = false;
    }
    std::string rest;
    if (!ok || (ls >> rest))
    {
      throw InvalidArgument("mesh line " + std::to_string(lineno) + ": cannot parse '" + line +
                            "'");
    }
  }
  return Triangulation(std::move(v), std::move(t), std::move(b));
}

Triangulation read_mesh(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open mesh file " + path.string());
  }
  return read_mesh(in);
}

void write_mesh(std::ostream &out, const Triangulation &mesh)
{
  std::ostringstream s;
  s.precision(17);
  for (const auto &p : mesh.vertices())
  {
    s << "v " << p.x << ' ' << p.y << '\n';
  }
  for (const auto &tri : mesh.triangles())
  {
    s << "t " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  for (const auto &[i, j] : mesh.dirichlet_edges())
  {
    s << "b " << i << ' ' << j << '\n';
  }
  out << s.str();
}

}  // namespace goafem
