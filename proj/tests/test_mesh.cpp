#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "glb/mesh.hpp"

using glb::Triangulation2D;

namespace {

int euler_characteristic(const Triangulation2D& mesh) {
  glb::EdgeTable et = glb::build_edges(mesh);
  return mesh.nv() - et.ne() + mesh.nt();
}

// scale-invariant shape signature: sorted side lengths over diameter
std::array<long long, 2> shape_class(const Triangulation2D& mesh, int t) {
  std::array<double, 3> s;
  for (int k = 0; k < 3; ++k)
    s[k] = (mesh.vertices[mesh.tri[t][(k + 1) % 3]] - mesh.vertices[mesh.tri[t][(k + 2) % 3]])
               .norm();
  std::sort(s.begin(), s.end());
  return {std::llround(1e9 * s[0] / s[2]), std::llround(1e9 * s[1] / s[2])};
}

int count_shape_classes(const Triangulation2D& mesh) {
  std::set<std::array<long long, 2>> classes;
  for (int t = 0; t < mesh.nt(); ++t) classes.insert(shape_class(mesh, t));
  return static_cast<int>(classes.size());
}

}  // namespace

TEST_CASE("builtin domains") {
  SUBCASE("unit_square") {
    auto m = glb::build_domain("unit_square");
    CHECK(m.nv() == 4);
    CHECK(m.nt() == 2);
    CHECK(m.boundary.size() == 4);
    CHECK(std::abs(glb::total_area(m) - 1.0) < 1e-14);
    CHECK(euler_characteristic(m) == 1);
    // refinement edge is the diagonal
    for (int t = 0; t < 2; ++t) {
      int k = m.refedge[t];
      int a = m.tri[t][(k + 1) % 3], b = m.tri[t][(k + 2) % 3];
      CHECK(std::abs((m.vertices[a] - m.vertices[b]).norm() - std::sqrt(2.0)) < 1e-14);
    }
  }
  SUBCASE("lshape") {
    auto m = glb::build_domain("lshape");
    CHECK(m.nv() == 8);
    CHECK(m.nt() == 6);
    CHECK(m.boundary.size() == 8);
    CHECK(std::abs(glb::total_area(m) - 3.0) < 1e-14);
    CHECK(euler_characteristic(m) == 1);
    CHECK(count_shape_classes(m) == 1);
  }
  SUBCASE("dumbbell_slit") {
    auto m = glb::build_domain("dumbbell_slit");
    CHECK(m.nt() == 272);
    CHECK(m.nv() == 180);
    CHECK(m.boundary.size() == 86);
    CHECK(std::abs(glb::total_area(m) - 8.5) < 1e-13);
    CHECK(euler_characteristic(m) == 1);  // slit domain is a topological disk
    // slit sides are distinct: four duplicated vertex positions
    int dup_pairs = 0;
    for (int v = 0; v < m.nv(); ++v)
      for (int w = v + 1; w < m.nv(); ++w)
        if ((m.vertices[v] - m.vertices[w]).norm() < 1e-14) ++dup_pairs;
    CHECK(dup_pairs == 4);
  }
  SUBCASE("four_slit") {
    auto m = glb::build_domain("four_slit");
    CHECK(m.nt() == 32);
    CHECK(m.nv() == 29);
    CHECK(m.boundary.size() == 24);
    CHECK(std::abs(glb::total_area(m) - 4.0) < 1e-14);
    CHECK(euler_characteristic(m) == 1);
    int dup_pairs = 0;
    for (int v = 0; v < m.nv(); ++v)
      for (int w = v + 1; w < m.nv(); ++w)
        if ((m.vertices[v] - m.vertices[w]).norm() < 1e-14) ++dup_pairs;
    CHECK(dup_pairs == 4);
  }
}

TEST_CASE("uniform refinement") {
  auto m = glb::build_domain("lshape");
  double area0 = glb::total_area(m);
  std::vector<int> expect_nt = {12, 24, 48, 96, 192, 384};
  std::vector<double> expect_h = {1.0, std::sqrt(0.5), 0.5, std::sqrt(0.125), 0.25,
                                  std::sqrt(0.03125)};
  for (std::size_t l = 0; l < expect_nt.size(); ++l) {
    m = glb::refine_uniform(m);
    glb::validate(m);
    CHECK(m.nt() == expect_nt[l]);
    CHECK(std::abs(glb::hmax(m) - expect_h[l]) < 1e-13);
    CHECK(std::abs(glb::total_area(m) - area0) < 1e-13);
    // every triangle congruent on these structured meshes
    CHECK(count_shape_classes(m) == 1);
    double h = 0.0, hmin = 1e300;
    for (int t = 0; t < m.nt(); ++t) {
      h = std::max(h, glb::tri_diameter(m, t));
      hmin = std::min(hmin, glb::tri_diameter(m, t));
    }
    CHECK(std::abs(h - hmin) < 1e-13);
  }
}

TEST_CASE("adaptive refinement conformity") {
  std::mt19937 rng(12345);
  for (const char* dom : {"unit_square", "four_slit"}) {
    auto m = glb::build_domain(dom);
    double area0 = glb::total_area(m);
    for (int round = 0; round < 60; ++round) {
      std::vector<int> marked;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int t = 0; t < m.nt(); ++t)
        if (u(rng) < 0.3) marked.push_back(t);
      if (marked.empty()) marked.push_back(static_cast<int>(rng() % m.nt()));
      auto next = glb::refine(m, marked);
      glb::validate(next);
      CHECK(next.nt() > m.nt());
      CHECK(std::abs(glb::total_area(next) - area0) < 1e-13);
      m = std::move(next);
      if (m.nt() > 40000) break;
    }
    CHECK(count_shape_classes(m) <= 2);
  }
}

TEST_CASE("marked triangles are bisected") {
  auto m = glb::build_domain("unit_square");
  auto r1 = glb::refine(m, {0});
  // shared diagonal forces the neighbour too
  CHECK(r1.nt() == 4);
  glb::validate(r1);
  // triangle 0 of r1 has its refinement edge on the boundary: no cascade
  auto r2 = glb::refine(r1, {0});
  glb::validate(r2);
  CHECK(r2.nt() == 5);
}

TEST_CASE("mesh io round trip") {
  auto m = glb::build_domain("dumbbell_slit");
  m = glb::refine_uniform(m);
  std::stringstream ss;
  glb::write_mesh(ss, m);
  auto m2 = glb::read_mesh(ss);
  REQUIRE(m2.nv() == m.nv());
  REQUIRE(m2.nt() == m.nt());
  REQUIRE(m2.boundary.size() == m.boundary.size());
  for (int v = 0; v < m.nv(); ++v) CHECK((m.vertices[v] - m2.vertices[v]).norm() == 0.0);
  for (int t = 0; t < m.nt(); ++t) {
    CHECK(m.tri[t] == m2.tri[t]);
    CHECK(m.refedge[t] == m2.refedge[t]);
  }
  // refinement after round trip matches
  auto a = glb::refine(m, {0, 5, 17});
  auto b = glb::refine(m2, {0, 5, 17});
  CHECK(a.nt() == b.nt());
}
