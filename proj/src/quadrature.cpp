#include "glb/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace glb {

namespace {

// Gauss rule for int_{-1}^{1} (1-x)^alpha f(x) dx via Golub-Welsch on the
// monic Jacobi (alpha, 0) recurrence.
void gauss_jacobi(int n, double alpha, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double a;
    if (i == 0)
      a = -alpha / (alpha + 2.0);
    else
      a = -alpha * alpha / ((2.0 * i + alpha) * (2.0 * i + alpha + 2.0));
    J(i, i) = a;
    if (i >= 1) {
      double s = 2.0 * i + alpha;
      double b = 4.0 * i * i * (i + alpha) * (i + alpha) / (s * s * (s * s - 1.0));
      J(i, i - 1) = J(i - 1, i) = std::sqrt(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double mu0 = std::pow(2.0, alpha + 1.0) / (alpha + 1.0);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    w[i] = mu0 * v0 * v0;
  }
}

// Same rule mapped to int_0^1 (1-u)^alpha f(u) du.
void gauss_jacobi01(int n, double alpha, std::vector<double>& u, std::vector<double>& w) {
  gauss_jacobi(n, alpha, u, w);
  double scale = std::pow(2.0, -alpha - 1.0);
  for (int i = 0; i < n; ++i) {
    u[i] = 0.5 * (1.0 + u[i]);
    w[i] *= scale;
  }
}

template <std::size_t N>
void push_all_permutations(std::array<double, N> p, double w,
                           std::vector<std::array<double, N>>& pts, std::vector<double>& ws) {
  std::array<int, N> idx;
  for (std::size_t i = 0; i < N; ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end());
  int count = 1;
  for (std::size_t i = 2; i <= N; ++i) count *= static_cast<int>(i);
  double wi = w / count;
  do {
    std::array<double, N> q;
    for (std::size_t i = 0; i < N; ++i) q[i] = p[idx[i]];
    pts.push_back(q);
    ws.push_back(wi);
  } while (std::next_permutation(idx.begin(), idx.end()));
}

TriRule make_tri_rule(int degree) {
  int k = (degree + 2) / 2;
  std::vector<double> u1, w1, u2, w2;
  gauss_jacobi01(k, 1.0, u1, w1);
  gauss_jacobi01(k, 0.0, u2, w2);
  TriRule r;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double l1 = u1[i];
      double l2 = (1.0 - u1[i]) * u2[j];
      double l3 = 1.0 - l1 - l2;
      double w = 2.0 * w1[i] * w2[j];  // reference area 1/2
      push_all_permutations<3>({l1, l2, l3}, w, r.bary, r.w);
    }
  return r;
}

TetRule make_tet_rule(int degree) {
  int k = (degree + 2) / 2;
  std::vector<double> u1, w1, u2, w2, u3, w3;
  gauss_jacobi01(k, 2.0, u1, w1);
  gauss_jacobi01(k, 1.0, u2, w2);
  gauss_jacobi01(k, 0.0, u3, w3);
  TetRule r;
  r.degree = degree;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l) {
        double l1 = u1[i];
        double l2 = (1.0 - u1[i]) * u2[j];
        double l3 = (1.0 - u1[i]) * (1.0 - u2[j]) * u3[l];
        double l4 = 1.0 - l1 - l2 - l3;
        double w = 6.0 * w1[i] * w2[j] * w3[l];  // reference volume 1/6
        push_all_permutations<4>({l1, l2, l3, l4}, w, r.bary, r.w);
      }
  return r;
}

}  // namespace

const TriRule& tri_rule_d6() {
  static const TriRule r = [] {
    // Dunavant, degree 6, 12 points: two 3-point orbits and one 6-point orbit.
    struct Orbit {
      double a, b, c, w;
    };
    const Orbit orbits[] = {
        {0.501426509658179, 0.249286745170910, 0.249286745170910, 0.116786275726379},
        {0.873821971016996, 0.063089014491502, 0.063089014491502, 0.050844906370207},
        {0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374},
    };
    TriRule rule;
    for (const Orbit& o : orbits) {
      std::array<double, 3> p = {o.a, o.b, o.c};
      std::vector<std::array<double, 3>> seen;
      std::array<int, 3> idx = {0, 1, 2};
      do {
        std::array<double, 3> q = {p[idx[0]], p[idx[1]], p[idx[2]]};
        if (std::find(seen.begin(), seen.end(), q) == seen.end()) {
          seen.push_back(q);
          rule.bary.push_back(q);
          rule.w.push_back(o.w);
        }
      } while (std::next_permutation(idx.begin(), idx.end()));
    }
    return rule;
  }();
  return r;
}

const TriRule& tri_rule(int degree) {
  static std::map<int, TriRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_tri_rule(degree)).first;
  return it->second;
}

EdgeRule edge_rule(int npoints) {
  EdgeRule r;
  gauss_jacobi01(npoints, 0.0, r.t, r.w);
  return r;
}

const EdgeRule& edge_rule_5() {
  static const EdgeRule r = edge_rule(5);
  return r;
}

const TetRule& tet_rule(int degree) {
  static std::map<int, TetRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_tet_rule(degree)).first;
  return it->second;
}

}  // namespace glb
