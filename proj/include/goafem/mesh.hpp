#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace goafem
{

struct Point
{
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point &, const Point &) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a);

// Vertex triple of a triangle. The edge opposite the first vertex is the refinement edge,
// i.e. the first vertex is the newest vertex.
using Triangle = std::array<int, 3>;

// Undirected edge, always stored with first < second.
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Conforming triangulation of a polygonal domain. Immutable after construction; the
// constructor validates orientation, conformity and the boundary flags and builds the
// edge and vertex adjacency used by the finite element and estimator code.
class Triangulation
{
public:
  Triangulation(std::vector<Point> vertices, std::vector<Triangle> triangles,
                std::vector<Edge> dirichlet_edges, std::vector<int> generation = {});

  // Reorders each triangle so that its longest edge (ties: lowest vertex-index pair) is the
  // refinement edge, keeping counterclockwise orientation.
  static Triangulation with_longest_edge_refinement(std::vector<Point> vertices,
                                                    std::vector<Triangle> triangles,
                                                    std::vector<Edge> dirichlet_edges);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const int> generation() const { return generation_; }
  const Point &vertex(int i) const { return vertices_[i]; }
  const Triangle &triangle(int t) const { return triangles_[t]; }

  // Sorted (lexicographic) list of all edges; edge ids index into it.
  std::span<const Edge> edges() const { return edges_; }
  int edge_id(int a, int b) const;  // -1 if absent
  // Edge ids of a triangle; entry k is the edge opposite local vertex k.
  const std::array<int, 3> &element_edges(int t) const { return element_edges_[t]; }
  // Adjacent elements of an edge; second is -1 for boundary edges.
  const std::array<int, 2> &edge_elements(int e) const { return edge_elements_[e]; }
  bool is_boundary_edge(int e) const { return edge_elements_[e][1] < 0; }
  bool is_dirichlet_edge(int e) const { return dirichlet_[e] != 0; }
  std::vector<Edge> dirichlet_edges() const;
  // Elements sharing vertex v, ascending.
  std::span<const int> vertex_elements(int v) const;

  double area(int t) const;
  double total_area() const;
  double diameter(int t) const;
  Point centroid(int t) const;
  Point map_to_physical(int t, const std::array<double, 3> &bary) const;

  bool check_index(int t) const { return t >= 0 && t < static_cast<int>(triangles_.size()); }

private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<int> generation_;

  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  std::vector<std::array<int, 2>> edge_elements_;
  std::vector<char> dirichlet_;
  std::vector<int> vertex_elements_offsets_;
  std::vector<int> vertex_elements_;
};

// Set of marked element indices of one triangulation: sorted, without duplicates.
class MarkedSet
{
public:
  MarkedSet() = default;
  // Sorts the indices; throws InvalidArgument on duplicates or out-of-range entries.
  MarkedSet(std::vector<int> elements, std::size_t num_elements);

  std::span<const int> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  bool contains(int t) const;

  friend bool operator==(const MarkedSet &, const MarkedSet &) = default;

private:
  std::vector<int> elements_;
};

struct Patch
{
  int center = -1;
  std::vector<int> members;  // ascending, includes center
  double area = 0.0;
};

// Correspondence between a triangulation and one of its refinements.
struct RefinementMap
{
  std::vector<int> parent;            // fine element -> coarse ancestor
  std::vector<char> inherited;        // fine element is also an element of the coarse mesh
  std::vector<std::vector<int>> children;  // coarse element -> fine descendants (itself if kept)
  std::vector<char> refined;          // coarse element is not an element of the fine mesh

  std::size_t num_inherited() const;
  std::size_t num_new() const { return inherited.size() - num_inherited(); }
  std::size_t num_refined() const;
};

// Newest-vertex bisection of every marked element followed by the conforming closure.
// bisections_per_marked = 3 bisects all three edges of each marked element.
Triangulation refine_nvb(const Triangulation &mesh, const MarkedSet &marked,
                         int bisections_per_marked = 1);

Triangulation uniform_refine(const Triangulation &mesh, int levels);

Patch patch_of(const Triangulation &mesh, int element);

// Locates each fine element inside the coarse mesh. Throws InvalidArgument if some fine
// element is not contained in any coarse element.
RefinementMap is_refinement_of(const Triangulation &fine, const Triangulation &coarse);

// Quality and conformity diagnostics.
struct MeshDiagnostics
{
  bool conforming = true;         // every interior edge shared by two elements, no hanging nodes
  bool positive_orientation = true;
  double min_area = 0.0;
  double total_area = 0.0;
  double max_shape_ratio = 0.0;   // max diam(T) / |T|^{1/2}
  std::size_t max_patch_size = 0;
  double max_patch_area_ratio = 0.0;
};

MeshDiagnostics diagnose(const Triangulation &mesh);

// Built-in initial meshes. All boundary edges are Dirichlet.
Triangulation unit_square_mesh();  // 2 triangles, diagonal (0,0)-(1,1)
Triangulation lshape_mesh();       // (-1,1)^2 \ [-1,0]^2, 6 triangles

// Text format: `v x y`, `t i j k` (refinement edge opposite i), `b i j`, `#` comments.
Triangulation read_mesh(std::istream &in);
Triangulation read_mesh(const std::filesystem::path &path);
void write_mesh(std::ostream &out, const Triangulation &mesh);

}  // namespace goafem
