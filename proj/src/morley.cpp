#include "glb/morley.hpp"

#include <cmath>
#include <stdexcept>

#include "glb/quadrature.hpp"

namespace glb {

double bessel_j11() { return 3.8317059702075123156; }

namespace {
double root_for_dim(int n) { return n == 2 ? bessel_j11() : M_PI; }
}  // namespace

double kappa1(int n) {
  double j = root_for_dim(n);
  return std::sqrt(1.0 / (j * j) + 1.0 / (2.0 * n * (n + 1.0) * (n + 2.0)));
}

double kappa2(int n) {
  double j = root_for_dim(n);
  double k1 = kappa1(n);
  return k1 / j +
         std::sqrt((n * k1 * k1 + 2.0 * k1) / (2.0 * (n - 1.0) * (n + 1.0) * (n + 2.0)));
}

Eigen::Vector3d MorleyLocal::barycentric(const Eigen::Vector2d& x) const {
  Eigen::Vector3d l;
  for (int k = 0; k < 3; ++k) l(k) = 1.0 + grad_lambda[k].dot(x - z[k]);
  return l;
}

namespace {

// value and gradient of basis function i at barycentric point l
void morley_eval_impl(const MorleyLocal& g, int i, const Eigen::Vector3d& l, double* val,
                      Eigen::Vector2d* grad) {
  if (i >= 3) {
    int k = i - 3;
    double s = g.sigma[k] / g.grad_lambda[k].norm();
    if (val) *val = s * l(k) * (l(k) - 1.0);
    if (grad) *grad = s * (2.0 * l(k) - 1.0) * g.grad_lambda[k];
    return;
  }
  int m = i, j = (i + 1) % 3, k = (i + 2) % 3;
  const Eigen::Vector2d &gj = g.grad_lambda[j], &gk = g.grad_lambda[k];
  double djk = gj.dot(gk);
  double nj2 = gj.squaredNorm(), nk2 = gk.squaredNorm();
  if (val)
    *val = l(m) + 2.0 * l(j) * l(k) -
           djk * (l(j) * (l(j) - 1.0) / nj2 + l(k) * (l(k) - 1.0) / nk2);
  if (grad)
    *grad = g.grad_lambda[m] + 2.0 * (l(k) * gj + l(j) * gk) -
            djk * ((2.0 * l(j) - 1.0) * gj / nj2 + (2.0 * l(k) - 1.0) * gk / nk2);
}

}  // namespace

double MorleyLocal::eval(int i, const Eigen::Vector2d& x) const {
  double v;
  morley_eval_impl(*this, i, barycentric(x), &v, nullptr);
  return v;
}

Eigen::Vector2d MorleyLocal::eval_grad(int i, const Eigen::Vector2d& x) const {
  Eigen::Vector2d gr;
  morley_eval_impl(*this, i, barycentric(x), nullptr, &gr);
  return gr;
}

double p2_eval(const Eigen::Vector3d& l, int i) {
  if (i < 3) return l(i) * (2.0 * l(i) - 1.0);
  int k = i - 3;
  return 4.0 * l((k + 1) % 3) * l((k + 2) % 3);
}

Eigen::Vector2d p2_eval_grad(const std::array<Eigen::Vector2d, 3>& gl, const Eigen::Vector3d& l,
                             int i) {
  if (i < 3) return (4.0 * l(i) - 1.0) * gl[i];
  int a = (i - 3 + 1) % 3, b = (i - 3 + 2) % 3;
  return 4.0 * (l(b) * gl[a] + l(a) * gl[b]);
}

MorleyLocal morley_local(const Eigen::Vector2d& z0, const Eigen::Vector2d& z1,
                         const Eigen::Vector2d& z2, const std::array<double, 3>& sigma) {
  MorleyLocal g;
  g.z = {z0, z1, z2};
  g.sigma = sigma;
  double det = (z1.x() - z0.x()) * (z2.y() - z0.y()) - (z2.x() - z0.x()) * (z1.y() - z0.y());
  g.area = 0.5 * det;
  if (g.area <= 0.0) throw std::runtime_error("morley_local: negative orientation");
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d &a = g.z[(k + 1) % 3], &b = g.z[(k + 2) % 3];
    Eigen::Vector2d e = b - a;
    g.grad_lambda[k] = Eigen::Vector2d(-e.y(), e.x()) / det;
  }

  // constant Hessians
  auto outer = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a * b.transpose() + b * a.transpose()).eval();
  };
  for (int m = 0; m < 3; ++m) {
    int j = (m + 1) % 3, k = (m + 2) % 3;
    const Eigen::Vector2d &gj = g.grad_lambda[j], &gk = g.grad_lambda[k];
    double djk = gj.dot(gk);
    g.hess[m] = 2.0 * outer(gj, gk) -
                djk * (outer(gj, gj) / gj.squaredNorm() + outer(gk, gk) / gk.squaredNorm());
  }
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d& gk = g.grad_lambda[k];
    g.hess[3 + k] = (g.sigma[k] / gk.norm()) * outer(gk, gk);
  }

  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      g.stiffness(i, j) = g.area * (g.hess[i].array() * g.hess[j].array()).sum();

  const TriRule& rule = tri_rule_d6();
  g.mass.setZero();
  g.mass_cross.setZero();
  g.mass_p2.setZero();
  for (std::size_t q = 0; q < rule.w.size(); ++q) {
    Eigen::Vector3d l(rule.bary[q][0], rule.bary[q][1], rule.bary[q][2]);
    double w = g.area * rule.w[q];
    Eigen::Matrix<double, 6, 1> phi, L;
    for (int i = 0; i < 6; ++i) {
      morley_eval_impl(g, i, l, &phi(i), nullptr);
      L(i) = p2_eval(l, i);
    }
    g.mass += w * phi * phi.transpose();
    g.mass_cross += w * phi * L.transpose();
    g.mass_p2 += w * L * L.transpose();
  }
  return g;
}

Eigen::Vector2d global_edge_normal(const Triangulation2D& mesh, int lo, int hi) {
  Eigen::Vector2d t = (mesh.vertices[hi] - mesh.vertices[lo]).normalized();
  return {t.y(), -t.x()};
}

MorleyDofMap morley_dofs(const Triangulation2D& mesh) {
  MorleyDofMap dm;
  dm.et = build_edges(mesh);
  dm.vertex_dof.assign(mesh.nv(), -1);
  dm.edge_dof.assign(dm.et.ne(), -1);
  int next = 0;
  for (int v = 0; v < mesh.nv(); ++v)
    if (!dm.et.vertex_on_boundary[v]) dm.vertex_dof[v] = next++;
  dm.n_vertex_dofs = next;
  for (int e = 0; e < dm.et.ne(); ++e)
    if (!dm.et.edge_on_boundary[e]) dm.edge_dof[e] = next++;
  dm.ndof = next;

  dm.sigma.resize(mesh.nt());
  for (int t = 0; t < mesh.nt(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int e = dm.et.tri_edges[t][k];
      Eigen::Vector2d nu = global_edge_normal(mesh, dm.et.edge_verts[e][0],
                                              dm.et.edge_verts[e][1]);
      // outward normal of the triangle on edge k points away from vertex k
      const Eigen::Vector2d& zk = mesh.vertices[mesh.tri[t][k]];
      const Eigen::Vector2d& za = mesh.vertices[mesh.tri[t][(k + 1) % 3]];
      const Eigen::Vector2d& zb = mesh.vertices[mesh.tri[t][(k + 2) % 3]];
      Eigen::Vector2d mid = 0.5 * (za + zb);
      double s = nu.dot(mid - zk);
      if (std::abs(s) < 1e-14) throw std::runtime_error("degenerate triangle normal");
      dm.sigma[t][k] = s > 0.0 ? 1.0 : -1.0;
    }
  }
  return dm;
}

MorleyInterpolant interpolate_morley(
    const Triangulation2D& mesh, const EdgeTable& et,
    const std::function<double(const Eigen::Vector2d&)>& f,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& grad_f) {
  MorleyInterpolant I;
  I.vertex_vals.resize(mesh.nv());
  for (int v = 0; v < mesh.nv(); ++v) I.vertex_vals(v) = f(mesh.vertices[v]);
  I.edge_means.resize(et.ne());
  const EdgeRule& rule = edge_rule_5();
  for (int e = 0; e < et.ne(); ++e) {
    int lo = et.edge_verts[e][0], hi = et.edge_verts[e][1];
    Eigen::Vector2d nu = global_edge_normal(mesh, lo, hi);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      Eigen::Vector2d x =
          (1.0 - rule.t[q]) * mesh.vertices[lo] + rule.t[q] * mesh.vertices[hi];
      s += rule.w[q] * grad_f(x).dot(nu);
    }
    I.edge_means(e) = s;
  }
  return I;
}

}  // namespace glb
