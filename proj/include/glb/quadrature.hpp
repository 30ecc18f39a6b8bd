#pragma once

#include <array>
#include <vector>

namespace glb {

// All rules use barycentric points and weights that sum to one, so that
//   integral over S  ~=~  measure(S) * sum_q w[q] * f(x_q).

struct TriRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;
};

struct EdgeRule {
  std::vector<double> t;  // points in [0,1]
  std::vector<double> w;
};

struct TetRule {
  std::vector<std::array<double, 4>> bary;
  std::vector<double> w;
  int degree = 0;
};

// Dunavant 12-point rule, exact for polynomials of total degree <= 6.
const TriRule& tri_rule_d6();

// Symmetric triangle rule of requested exactness degree (generated, cached).
const TriRule& tri_rule(int degree);

// 5-point Gauss-Legendre on [0,1], exact for degree <= 9.
const EdgeRule& edge_rule_5();

// Gauss-Legendre on [0,1] with n points, exact for degree <= 2n-1.
EdgeRule edge_rule(int npoints);

// Symmetric tetrahedron rule of requested exactness degree (generated, cached).
// Positive weights; invariant under vertex permutations.
const TetRule& tet_rule(int degree);

}  // namespace glb
