#include "glb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace glb {

namespace {

std::array<int, 2> sorted_pair(int a, int b) {
  return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

double signed_area(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                   const Eigen::Vector2d& p2) {
  return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

}  // namespace

double tri_area(const Triangulation2D& mesh, int t) {
  const auto& v = mesh.tri[t];
  return signed_area(mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]]);
}

double tri_diameter(const Triangulation2D& mesh, int t) {
  const auto& v = mesh.tri[t];
  double d = 0.0;
  for (int k = 0; k < 3; ++k)
    d = std::max(d, (mesh.vertices[v[(k + 1) % 3]] - mesh.vertices[v[(k + 2) % 3]]).norm());
  return d;
}

double hmax(const Triangulation2D& mesh) {
  double h = 0.0;
  for (int t = 0; t < mesh.nt(); ++t) h = std::max(h, tri_diameter(mesh, t));
  return h;
}

double total_area(const Triangulation2D& mesh) {
  double a = 0.0;
  for (int t = 0; t < mesh.nt(); ++t) a += tri_area(mesh, t);
  return a;
}

void init_refinement_edges(Triangulation2D& mesh) {
  mesh.refedge.resize(mesh.nt());
  for (int t = 0; t < mesh.nt(); ++t) {
    const auto& v = mesh.tri[t];
    int best = 0;
    double best_len = -1.0;
    std::array<int, 2> best_pair = {0, 0};
    for (int k = 0; k < 3; ++k) {
      int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
      double len = (mesh.vertices[a] - mesh.vertices[b]).norm();
      std::array<int, 2> pair = sorted_pair(a, b);
      if (len > best_len + 1e-14 * len ||
          (std::abs(len - best_len) <= 1e-14 * len && pair < best_pair)) {
        best = k;
        best_len = len;
        best_pair = pair;
      }
    }
    mesh.refedge[t] = best;
  }
}

EdgeTable build_edges(const Triangulation2D& mesh) {
  EdgeTable et;
  std::map<std::array<int, 2>, int> edge_id;
  et.tri_edges.resize(mesh.nt());
  for (int t = 0; t < mesh.nt(); ++t) {
    const auto& v = mesh.tri[t];
    for (int k = 0; k < 3; ++k) {
      auto key = sorted_pair(v[(k + 1) % 3], v[(k + 2) % 3]);
      auto it = edge_id.find(key);
      int e;
      if (it == edge_id.end()) {
        e = static_cast<int>(et.edge_verts.size());
        edge_id.emplace(key, e);
        et.edge_verts.push_back(key);
        et.edge_tris.push_back({t, -1});
      } else {
        e = it->second;
        if (et.edge_tris[e][1] != -1) throw std::runtime_error("edge in more than two triangles");
        et.edge_tris[e][1] = t;
      }
      et.tri_edges[t][k] = e;
    }
  }
  et.edge_on_boundary.assign(et.ne(), 0);
  et.vertex_on_boundary.assign(mesh.nv(), 0);
  for (const auto& b : mesh.boundary) {
    auto it = edge_id.find(sorted_pair(b[0], b[1]));
    if (it == edge_id.end()) throw std::runtime_error("boundary edge not in triangulation");
    et.edge_on_boundary[it->second] = 1;
    et.vertex_on_boundary[b[0]] = 1;
    et.vertex_on_boundary[b[1]] = 1;
  }
  return et;
}

void validate(const Triangulation2D& mesh) {
  if (mesh.refedge.size() != mesh.tri.size()) throw std::runtime_error("refedge size mismatch");
  for (int t = 0; t < mesh.nt(); ++t) {
    if (mesh.refedge[t] < 0 || mesh.refedge[t] > 2) throw std::runtime_error("bad refedge");
    for (int k = 0; k < 3; ++k) {
      int v = mesh.tri[t][k];
      if (v < 0 || v >= mesh.nv()) throw std::runtime_error("vertex id out of range");
    }
    if (tri_area(mesh, t) <= 0.0) throw std::runtime_error("non-positive triangle orientation");
  }
  EdgeTable et = build_edges(mesh);
  for (int e = 0; e < et.ne(); ++e) {
    bool single = et.edge_tris[e][1] == -1;
    if (single != static_cast<bool>(et.edge_on_boundary[e]))
      throw std::runtime_error("boundary list does not match single-triangle edges");
  }
  if (static_cast<int>(mesh.boundary.size()) !=
      std::count(et.edge_on_boundary.begin(), et.edge_on_boundary.end(), 1))
    throw std::runtime_error("duplicate boundary entries");
}

namespace {

void emit_or_bisect(const Triangulation2D& mesh, std::array<int, 3> v, int k,
                    const std::map<std::array<int, 2>, int>& midpoint,
                    std::vector<std::array<int, 3>>& out_tri, std::vector<int>& out_ref) {
  int a = v[(k + 1) % 3], b = v[(k + 2) % 3], c = v[k];
  auto it = midpoint.find(sorted_pair(a, b));
  if (it == midpoint.end()) {
    out_tri.push_back(v);
    out_ref.push_back(k);
    return;
  }
  int m = it->second;
  emit_or_bisect(mesh, {a, m, c}, 1, midpoint, out_tri, out_ref);
  emit_or_bisect(mesh, {m, b, c}, 0, midpoint, out_tri, out_ref);
}

}  // namespace

Triangulation2D refine(const Triangulation2D& mesh, const std::vector<int>& marked) {
  // closure: a triangle with any marked edge must have its refinement edge marked
  std::set<std::array<int, 2>> marked_edges;
  auto ref_pair = [&](int t) {
    int k = mesh.refedge[t];
    return sorted_pair(mesh.tri[t][(k + 1) % 3], mesh.tri[t][(k + 2) % 3]);
  };
  for (int t : marked) marked_edges.insert(ref_pair(t));
  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = 0; t < mesh.nt(); ++t) {
      bool any = false;
      for (int k = 0; k < 3; ++k)
        if (marked_edges.count(sorted_pair(mesh.tri[t][(k + 1) % 3], mesh.tri[t][(k + 2) % 3])))
          any = true;
      if (any && !marked_edges.count(ref_pair(t))) {
        marked_edges.insert(ref_pair(t));
        changed = true;
      }
    }
  }

  Triangulation2D out;
  out.vertices = mesh.vertices;
  std::map<std::array<int, 2>, int> midpoint;
  for (const auto& e : marked_edges) {
    int m = out.nv();
    out.vertices.push_back(0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]));
    midpoint.emplace(e, m);
  }
  for (int t = 0; t < mesh.nt(); ++t)
    emit_or_bisect(mesh, mesh.tri[t], mesh.refedge[t], midpoint, out.tri, out.refedge);

  for (const auto& b : mesh.boundary) {
    auto it = midpoint.find(sorted_pair(b[0], b[1]));
    if (it == midpoint.end()) {
      out.boundary.push_back(b);
    } else {
      out.boundary.push_back(sorted_pair(b[0], it->second));
      out.boundary.push_back(sorted_pair(it->second, b[1]));
    }
  }
  return out;
}

Triangulation2D refine_uniform(const Triangulation2D& mesh) {
  std::vector<int> all(mesh.nt());
  for (int t = 0; t < mesh.nt(); ++t) all[t] = t;
  return refine(mesh, all);
}

namespace {

// Structured grid of square cells split along the SW-NE diagonal.
Triangulation2D structured_grid(double x0, double y0, int nx, int ny, double h,
                                const std::function<bool(int, int)>& keep_cell) {
  Triangulation2D mesh;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.push_back({x0 + i * h, y0 + j * h});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!keep_cell(i, j)) continue;
      int p00 = vid(i, j), p10 = vid(i + 1, j), p11 = vid(i + 1, j + 1), p01 = vid(i, j + 1);
      mesh.tri.push_back({p00, p10, p11});
      mesh.tri.push_back({p00, p11, p01});
    }
  // drop unused vertices
  std::vector<int> remap(mesh.nv(), -1);
  std::vector<Eigen::Vector2d> kept;
  for (auto& t : mesh.tri)
    for (int& v : t) {
      if (remap[v] == -1) {
        remap[v] = static_cast<int>(kept.size());
        kept.push_back(mesh.vertices[v]);
      }
      v = remap[v];
    }
  mesh.vertices = kept;
  return mesh;
}

int find_vertex(const Triangulation2D& mesh, double x, double y) {
  for (int v = 0; v < mesh.nv(); ++v)
    if ((mesh.vertices[v] - Eigen::Vector2d(x, y)).norm() < 1e-12) return v;
  throw std::runtime_error("vertex not found");
}

// Duplicate the given vertices; triangles whose centroid satisfies `upper`
// are remapped to the copies. Call before deriving the boundary.
void duplicate_slit(Triangulation2D& mesh, const std::vector<int>& dup,
                    const std::function<bool(const Eigen::Vector2d&)>& upper) {
  for (int v : dup) {
    int copy = mesh.nv();
    mesh.vertices.push_back(mesh.vertices[v]);
    for (auto& t : mesh.tri) {
      Eigen::Vector2d c =
          (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
      if (!upper(c)) continue;
      for (int& w : t)
        if (w == v) w = copy;
    }
  }
}

void derive_boundary(Triangulation2D& mesh) {
  std::map<std::array<int, 2>, int> count;
  for (const auto& t : mesh.tri)
    for (int k = 0; k < 3; ++k) count[sorted_pair(t[(k + 1) % 3], t[(k + 2) % 3])]++;
  mesh.boundary.clear();
  for (const auto& [e, c] : count)
    if (c == 1) mesh.boundary.push_back(e);
}

}  // namespace

Triangulation2D build_domain(const std::string& name) {
  Triangulation2D mesh;
  if (name == "unit_square") {
    mesh = structured_grid(0.0, 0.0, 1, 1, 1.0, [](int, int) { return true; });
  } else if (name == "lshape") {
    // (-1,1)^2 minus the fourth-quadrant square
    mesh = structured_grid(-1.0, -1.0, 2, 2, 1.0,
                           [](int i, int j) { return !(i == 1 && j == 0); });
  } else if (name == "dumbbell_slit") {
    // rectangle (-1,5)x(-1,1) minus notch [1,3]x[-0.75,1] minus slit [-1,0]x{0}
    mesh = structured_grid(-1.0, -1.0, 24, 8, 0.25, [](int i, int j) {
      return !(i >= 8 && i < 16 && j >= 1);
    });
    std::vector<int> dup;
    for (double x : {-1.0, -0.75, -0.5, -0.25}) dup.push_back(find_vertex(mesh, x, 0.0));
    duplicate_slit(mesh, dup, [](const Eigen::Vector2d& c) { return c.y() > 0.0; });
  } else if (name == "four_slit") {
    // (-1,1)^2 minus four slits from the edge midpoints halfway inward
    mesh = structured_grid(-1.0, -1.0, 4, 4, 0.5, [](int, int) { return true; });
    duplicate_slit(mesh, {find_vertex(mesh, 1.0, 0.0)},
                   [](const Eigen::Vector2d& c) { return c.y() > 0.0 && c.x() > 0.5; });
    duplicate_slit(mesh, {find_vertex(mesh, -1.0, 0.0)},
                   [](const Eigen::Vector2d& c) { return c.y() > 0.0 && c.x() < -0.5; });
    duplicate_slit(mesh, {find_vertex(mesh, 0.0, 1.0)},
                   [](const Eigen::Vector2d& c) { return c.x() > 0.0 && c.y() > 0.5; });
    duplicate_slit(mesh, {find_vertex(mesh, 0.0, -1.0)},
                   [](const Eigen::Vector2d& c) { return c.x() > 0.0 && c.y() < -0.5; });
  } else {
    throw std::runtime_error("unknown domain: " + name);
  }
  derive_boundary(mesh);
  init_refinement_edges(mesh);
  validate(mesh);
  return mesh;
}

void write_mesh(std::ostream& os, const Triangulation2D& mesh) {
  os << "mesh2d v1\n";
  os << "vertices " << mesh.nv() << "\n";
  os.precision(17);
  for (const auto& v : mesh.vertices) os << v.x() << " " << v.y() << "\n";
  os << "triangles " << mesh.nt() << "\n";
  for (int t = 0; t < mesh.nt(); ++t)
    os << mesh.tri[t][0] << " " << mesh.tri[t][1] << " " << mesh.tri[t][2] << " "
       << mesh.refedge[t] << "\n";
  os << "boundary " << mesh.boundary.size() << "\n";
  for (const auto& b : mesh.boundary) os << b[0] << " " << b[1] << "\n";
}

Triangulation2D read_mesh(std::istream& is) {
  std::string magic, version;
  is >> magic >> version;
  if (magic != "mesh2d" || version != "v1") throw std::runtime_error("bad mesh header");
  auto expect = [&](const char* kw) {
    std::string s;
    is >> s;
    if (s != kw) throw std::runtime_error(std::string("expected ") + kw);
  };
  Triangulation2D mesh;
  expect("vertices");
  int nv;
  is >> nv;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) is >> v.x() >> v.y();
  expect("triangles");
  int nt;
  is >> nt;
  mesh.tri.resize(nt);
  mesh.refedge.resize(nt);
  for (int t = 0; t < nt; ++t)
    is >> mesh.tri[t][0] >> mesh.tri[t][1] >> mesh.tri[t][2] >> mesh.refedge[t];
  expect("boundary");
  int nb;
  is >> nb;
  mesh.boundary.resize(nb);
  for (auto& b : mesh.boundary) {
    is >> b[0] >> b[1];
    b = sorted_pair(b[0], b[1]);
  }
  if (!is) throw std::runtime_error("truncated mesh file");
  validate(mesh);
  return mesh;
}

}  // namespace glb
