#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace glb {

// Conforming triangulation with newest-vertex-bisection bookkeeping.
// Triangles are positively oriented; refedge[t] is the local index of the
// vertex opposite the refinement edge. Slit domains use duplicated vertex
// ids along the slit, so adjacency is purely combinatorial.
struct Triangulation2D {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> tri;
  std::vector<int> refedge;
  std::vector<std::array<int, 2>> boundary;  // vertex pairs, lo < hi

  int nv() const { return static_cast<int>(vertices.size()); }
  int nt() const { return static_cast<int>(tri.size()); }
};

// Derived connectivity. Edge i has endpoints edge_verts[i] (lo < hi);
// tri_edges[t][k] is the edge opposite vertex k of triangle t;
// edge_tris[e] holds one or two triangle ids (-1 if absent).
struct EdgeTable {
  std::vector<std::array<int, 2>> edge_verts;
  std::vector<std::array<int, 3>> tri_edges;
  std::vector<std::array<int, 2>> edge_tris;
  std::vector<char> edge_on_boundary;
  std::vector<char> vertex_on_boundary;

  int ne() const { return static_cast<int>(edge_verts.size()); }
};

// Builtin initial meshes: "unit_square", "lshape", "dumbbell_slit", "four_slit".
Triangulation2D build_domain(const std::string& name);

// Refinement edge = longest edge, ties by lexicographically smallest
// (lo, hi) vertex pair. Used by the domain builders and mesh import.
void init_refinement_edges(Triangulation2D& mesh);

// Newest-vertex bisection of the marked triangles plus conforming closure.
Triangulation2D refine(const Triangulation2D& mesh, const std::vector<int>& marked);

// Full marking.
Triangulation2D refine_uniform(const Triangulation2D& mesh);

EdgeTable build_edges(const Triangulation2D& mesh);

// Throws std::runtime_error on inconsistent meshes.
void validate(const Triangulation2D& mesh);

double tri_area(const Triangulation2D& mesh, int t);
double tri_diameter(const Triangulation2D& mesh, int t);
double hmax(const Triangulation2D& mesh);
double total_area(const Triangulation2D& mesh);

// "mesh2d v1" format.
void write_mesh(std::ostream& os, const Triangulation2D& mesh);
Triangulation2D read_mesh(std::istream& is);

}  // namespace glb
