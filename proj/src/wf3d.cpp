#include "glb/wf3d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "glb/quadrature.hpp"

namespace glb::wf3d {

namespace {

template <int M, int K, int N>
std::array<std::array<int, M>, N> make_multi_indices() {
  std::array<std::array<int, M>, N> out{};
  int pos = 0;
  std::array<int, M> a{};
  // lexicographic with leading components decreasing
  auto rec = [&](auto&& self, int comp, int rest) -> void {
    if (comp == M - 1) {
      a[comp] = rest;
      out[pos++] = a;
      return;
    }
    for (int v = rest; v >= 0; --v) {
      a[comp] = v;
      self(self, comp + 1, rest - v);
    }
  };
  rec(rec, 0, K);
  return out;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// mean of lambda^a over a tetrahedron
double tet_mono_mean(const std::array<int, 4>& a) {
  return factorial(a[0]) * factorial(a[1]) * factorial(a[2]) * factorial(a[3]) * 6.0 /
         factorial(a[0] + a[1] + a[2] + a[3] + 3);
}

std::array<int, 3> face_vertices(int m) {
  std::array<int, 3> v{};
  int p = 0;
  for (int i = 0; i < 4; ++i)
    if (i != m) v[p++] = i;
  return v;
}

int edge_of(int j, int k) {
  if (j > k) std::swap(j, k);
  for (int e = 0; e < 6; ++e)
    if (kEdge[e][0] == j && kEdge[e][1] == k) return e;
  throw std::runtime_error("bad edge pair");
}

double mono(const Eigen::Vector4d& lam, const std::array<int, 4>& a) {
  double p = 1.0;
  for (int i = 0; i < 4; ++i)
    for (int r = 0; r < a[i]; ++r) p *= lam[i];
  return p;
}

constexpr double kBubbleScale = 65536.0;  // 4^8

}  // namespace

const std::array<std::array<int, 4>, 20> kCubic = make_multi_indices<4, 3, 20>();
const std::array<std::array<int, 4>, 10> kQuad = make_multi_indices<4, 2, 10>();
const std::array<std::array<int, 3>, 10> kFaceCubic = make_multi_indices<3, 3, 10>();

const std::array<std::array<int, 2>, 6> kEdge = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

int cubic_index(const std::array<int, 4>& a) {
  for (int i = 0; i < 20; ++i)
    if (kCubic[i] == a) return i;
  throw std::runtime_error("bad cubic multi-index");
}

int quad_index(const std::array<int, 4>& a) {
  for (int i = 0; i < 10; ++i)
    if (kQuad[i] == a) return i;
  throw std::runtime_error("bad quadratic multi-index");
}

int face_cubic_index(const std::array<int, 3>& a) {
  for (int i = 0; i < 10; ++i)
    if (kFaceCubic[i] == a) return i;
  throw std::runtime_error("bad face multi-index");
}

double Tet::volume() const {
  return std::abs((q[1] - q[0]).cross(q[2] - q[0]).dot(q[3] - q[0])) / 6.0;
}

double Tet::diameter() const {
  double d = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) d = std::max(d, (q[i] - q[j]).norm());
  return d;
}

Eigen::Vector3d Tet::centroid() const { return (q[0] + q[1] + q[2] + q[3]) / 4.0; }

Eigen::Vector3d Tet::face_centroid(int m) const {
  auto v = face_vertices(m);
  return (q[v[0]] + q[v[1]] + q[v[2]]) / 3.0;
}

double Tet::face_area(int m) const {
  auto v = face_vertices(m);
  return 0.5 * (q[v[1]] - q[v[0]]).cross(q[v[2]] - q[v[0]]).norm();
}

Eigen::Vector3d Tet::face_normal(int m) const {
  auto v = face_vertices(m);
  Eigen::Vector3d n = (q[v[1]] - q[v[0]]).cross(q[v[2]] - q[v[0]]).normalized();
  if (n.dot(q[m] - q[v[0]]) > 0.0) n = -n;
  return n;
}

Eigen::Vector3d Tet::edge_midpoint(int e) const {
  return 0.5 * (q[kEdge[e][0]] + q[kEdge[e][1]]);
}

EdgeFrame Tet::edge_frame(int e) const {
  EdgeFrame f;
  f.tau = (q[kEdge[e][1]] - q[kEdge[e][0]]).normalized();
  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(f.tau[d]) < std::abs(f.tau[axis])) axis = d;
  Eigen::Vector3d a = Eigen::Vector3d::Unit(axis);
  f.nu1 = (a - a.dot(f.tau) * f.tau).normalized();
  f.nu2 = f.tau.cross(f.nu1);
  return f;
}

Eigen::Vector4d Tet::barycentric(const Eigen::Vector3d& x) const {
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    a(0, i) = 1.0;
    a.block<3, 1>(1, i) = q[i];
  }
  Eigen::Vector4d rhs;
  rhs << 1.0, x;
  return a.partialPivLu().solve(rhs);
}

std::array<Eigen::Vector3d, 4> Tet::grad_lambda() const {
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    a(0, i) = 1.0;
    a.block<3, 1>(1, i) = q[i];
  }
  Eigen::Matrix4d inv = a.inverse();
  std::array<Eigen::Vector3d, 4> g;
  for (int i = 0; i < 4; ++i) g[i] = inv.block<1, 3>(i, 1).transpose();
  return g;
}

Eigen::Vector3d incircle_center(const Tet& t) {
  double total = 0.0;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int m = 0; m < 4; ++m) {
    double a = t.face_area(m);
    total += a;
    c += a * t.q[m];
  }
  if (!(total > 0.0) || t.volume() <= 0.0) throw std::runtime_error("degenerate tetrahedron");
  return c / total;
}

WFPartition wf_partition(const Tet& t,
                         const std::array<std::optional<Eigen::Vector3d>, 4>& neighbor_center) {
  if (t.volume() <= 0.0) throw std::runtime_error("degenerate tetrahedron");
  WFPartition p;
  p.macro = t;
  p.ck = incircle_center(t);
  for (int m = 0; m < 4; ++m) {
    if (!neighbor_center[m]) {
      p.cf[m] = t.face_centroid(m);
      continue;
    }
    auto v = face_vertices(m);
    Eigen::Vector3d n = t.face_normal(m);
    Eigen::Vector3d dir = *neighbor_center[m] - p.ck;
    double denom = n.dot(dir);
    if (std::abs(denom) < 1e-14 * t.diameter()) throw std::runtime_error("segment misses the face");
    double s = n.dot(t.q[v[0]] - p.ck) / denom;
    if (s <= 0.0 || s >= 1.0) throw std::runtime_error("segment misses the face");
    Eigen::Vector3d x = p.ck + s * dir;
    // in-face barycentrics must be strictly positive
    Eigen::Vector4d lam = t.barycentric(x);
    for (int i = 0; i < 3; ++i)
      if (lam[v[i]] <= 0.0) throw std::runtime_error("segment misses the face");
    p.cf[m] = x;
  }
  int s = 0;
  for (int e = 0; e < 6; ++e) {
    int j = kEdge[e][0], k = kEdge[e][1];
    for (int m = 0; m < 4; ++m) {
      if (m == j || m == k) continue;
      p.sub[s].q = {p.ck, p.cf[m], t.q[j], t.q[k]};
      p.label[s] = {m, j, k};
      ++s;
    }
  }
  // distance of an interior point to the boundary of an intersection of
  // half-spaces is the minimal distance to the bounding planes
  double dist = std::numeric_limits<double>::max();
  for (int m = 0; m < 4; ++m) {
    auto v = face_vertices(m);
    dist = std::min(dist, std::abs(t.face_normal(m).dot(p.ck - t.q[v[0]])));
  }
  p.eps_center = dist / t.diameter();
  p.eps_face = std::numeric_limits<double>::max();
  for (int m = 0; m < 4; ++m) {
    auto v = face_vertices(m);
    double hf = 0.0, df = std::numeric_limits<double>::max();
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d a = t.q[v[i]], b = t.q[v[(i + 1) % 3]];
      hf = std::max(hf, (b - a).norm());
      Eigen::Vector3d u = (b - a).normalized();
      Eigen::Vector3d w = p.cf[m] - a;
      df = std::min(df, (w - w.dot(u) * u).norm());
    }
    p.eps_face = std::min(p.eps_face, df / hf);
  }
  return p;
}

int vertex_value_dof(int mu) { return mu; }
int vertex_gradient_dof(int mu, int axis) { return 4 + 4 * axis + mu; }
int edge_normal_dof(int e, int m) { return 16 + 2 * e + m; }

Dof28 sample_dofs(const Tet& t, const std::function<double(const Eigen::Vector3d&)>& f,
                  const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& grad_f) {
  Dof28 x{};
  for (int mu = 0; mu < 4; ++mu) {
    x[vertex_value_dof(mu)] = f(t.q[mu]);
    Eigen::Vector3d g = grad_f(t.q[mu]);
    for (int d = 0; d < 3; ++d) x[vertex_gradient_dof(mu, d)] = g[d];
  }
  for (int e = 0; e < 6; ++e) {
    EdgeFrame fr = t.edge_frame(e);
    Eigen::Vector3d g = grad_f(t.edge_midpoint(e));
    x[edge_normal_dof(e, 0)] = g.dot(fr.nu1);
    x[edge_normal_dof(e, 1)] = g.dot(fr.nu2);
  }
  return x;
}

Eval eval_bernstein(const Ordinates& c, const Tet& t, const Eigen::Vector3d& x) {
  Eigen::Vector4d lam = t.barycentric(x);
  auto gl = t.grad_lambda();
  Eval out;
  for (int i = 0; i < 20; ++i) {
    const auto& a = kCubic[i];
    double fa = factorial(a[0]) * factorial(a[1]) * factorial(a[2]) * factorial(a[3]);
    out.value += c[i] * mono(lam, a) / fa;
  }
  out.value *= 6.0;
  for (int i = 0; i < 10; ++i) {
    const auto& b = kQuad[i];
    double fb = factorial(b[0]) * factorial(b[1]) * factorial(b[2]) * factorial(b[3]);
    double base = mono(lam, b) / fb;
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int mu = 0; mu < 4; ++mu) {
      std::array<int, 4> a = b;
      ++a[mu];
      s += c[cubic_index(a)] * gl[mu];
    }
    out.grad += base * s;
  }
  out.grad *= 6.0;
  return out;
}

Eigen::Matrix3d eval_bernstein_hessian(const Ordinates& c, const Tet& t,
                                       const Eigen::Vector3d& x) {
  Eigen::Vector4d lam = t.barycentric(x);
  auto gl = t.grad_lambda();
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (int g = 0; g < 4; ++g) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) {
        std::array<int, 4> a{};
        ++a[g];
        ++a[mu];
        ++a[nu];
        m += c[cubic_index(a)] * gl[mu] * gl[nu].transpose();
      }
    h += lam[g] * m;
  }
  return 6.0 * h;
}

Eval eval_wf(const WFPartition& p, const WFOrdinates& c, const Eigen::Vector3d& x) {
  int best = 0;
  double best_min = -std::numeric_limits<double>::max();
  for (int s = 0; s < 12; ++s) {
    double m = p.sub[s].barycentric(x).minCoeff();
    if (m > best_min) {
      best_min = m;
      best = s;
    }
  }
  return eval_bernstein(c[best], p.sub[best], x);
}

// ---- 2D Hsieh-Clough-Tocher ----

namespace {

Eigen::Vector3d plane_normal(const std::array<Eigen::Vector3d, 3>& v) {
  return (v[1] - v[0]).cross(v[2] - v[0]).normalized();
}

// in-plane barycentric coordinates of a point in the triangle's plane
Eigen::Vector3d face_bary(const std::array<Eigen::Vector3d, 3>& v, const Eigen::Vector3d& x) {
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = v[1] - v[0];
  b.col(1) = v[2] - v[0];
  Eigen::Vector2d t = (b.transpose() * b).ldlt().solve(b.transpose() * (x - v[0]));
  return {1.0 - t[0] - t[1], t[0], t[1]};
}

// in-plane gradients of the barycentric coordinates
std::array<Eigen::Vector3d, 3> face_grad_lambda(const std::array<Eigen::Vector3d, 3>& v) {
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = v[1] - v[0];
  b.col(1) = v[2] - v[0];
  Eigen::Matrix<double, 3, 2> g = b * (b.transpose() * b).inverse();
  std::array<Eigen::Vector3d, 3> out;
  out[1] = g.col(0);
  out[2] = g.col(1);
  out[0] = -out[1] - out[2];
  return out;
}

double face_mono(const Eigen::Vector3d& lam, const std::array<int, 3>& a) {
  double p = 1.0;
  for (int i = 0; i < 3; ++i)
    for (int r = 0; r < a[i]; ++r) p *= lam[i];
  return p;
}

}  // namespace

Eigen::Vector3d hct_edge_normal(const std::array<Eigen::Vector3d, 3>& v, int i) {
  int j = (i + 1) % 3, k = (i + 2) % 3;
  if (j > k) std::swap(j, k);
  Eigen::Vector3d tau = (v[k] - v[j]).normalized();
  Eigen::Vector3d n = plane_normal(v).cross(tau);
  if (n.dot(v[i] - v[j]) > 0.0) n = -n;
  return n;
}

HctOrdinates hct2d_interpolate(const std::array<Eigen::Vector3d, 3>& v,
                               const Eigen::Vector3d& center, const HctDofs& dofs) {
  Eigen::Vector3d npl = plane_normal(v);
  Eigen::Vector3d a = face_bary(v, center);
  if (a.minCoeff() <= 0.0) throw std::runtime_error("hct centre outside the face");
  std::array<Eigen::Vector3d, 3> gp;
  for (int i = 0; i < 3; ++i) gp[i] = dofs.grad[i] - dofs.grad[i].dot(npl) * npl;
  // ordinate with multiplicity (1 centre, 2 vertex i), shared by sub-triangles
  std::array<double, 3> kv;
  for (int i = 0; i < 3; ++i) kv[i] = dofs.value[i] + (center - v[i]).dot(gp[i]) / 3.0;
  std::array<double, 3> mid;  // c(1,1,1) per sub-triangle
  std::array<std::array<double, 4>, 3> outer;
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    if (j > k) std::swap(j, k);
    double len = (v[k] - v[j]).norm();
    Eigen::Vector3d tau = (v[k] - v[j]) / len;
    double dj = gp[j].dot(tau), dk = gp[k].dot(tau);
    double fj = dofs.value[j], fk = dofs.value[k];
    double fmid = 0.5 * (fj + fk) + len * (dj - dk) / 8.0;
    double dtan = 1.5 * (fk - fj) / len - 0.25 * (dj + dk);
    Eigen::Vector3d gmid = dtan * tau + dofs.dn[i] * hct_edge_normal(v, i);
    Eigen::Vector3d midpt = 0.5 * (v[j] + v[k]);
    outer[i] = {fj, fj + (v[k] - v[j]).dot(gp[j]) / 3.0, fk + (v[j] - v[k]).dot(gp[k]) / 3.0,
                fk};
    mid[i] = 0.5 * ((4.0 / 3.0) * (center - midpt).dot(gmid) + 4.0 * fmid - kv[j] - kv[k]);
  }
  // C1 across internal edge (centre, V_i): the layer-one condition fixes the
  // edge ordinate u_i, the layer-zero condition then fixes the centre value w
  std::array<double, 3> u;
  for (int i = 0; i < 3; ++i) {
    int m = (i + 1) % 3, mp = (i + 2) % 3;
    if (m > mp) std::swap(m, mp);
    double mu1 = 1.0 / a[m], mu2 = -a[i] / a[m], mu3 = -a[mp] / a[m];
    u[i] = (mid[mp] - mu2 * kv[i] - mu3 * mid[m]) / mu1;
  }
  double w = 0.0;
  for (int i = 0; i < 3; ++i) {
    int m = (i + 1) % 3, mp = (i + 2) % 3;
    if (m > mp) std::swap(m, mp);
    double mu1 = 1.0 / a[m], mu2 = -a[i] / a[m], mu3 = -a[mp] / a[m];
    w += (u[m] - mu2 * u[i] - mu3 * u[mp]) / mu1;
  }
  w /= 3.0;
  HctOrdinates out{};
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    if (j > k) std::swap(j, k);
    FaceOrdinates& c = out[i];
    c[face_cubic_index({3, 0, 0})] = w;
    c[face_cubic_index({2, 1, 0})] = u[j];
    c[face_cubic_index({2, 0, 1})] = u[k];
    c[face_cubic_index({1, 2, 0})] = kv[j];
    c[face_cubic_index({1, 1, 1})] = mid[i];
    c[face_cubic_index({1, 0, 2})] = kv[k];
    c[face_cubic_index({0, 3, 0})] = outer[i][0];
    c[face_cubic_index({0, 2, 1})] = outer[i][1];
    c[face_cubic_index({0, 1, 2})] = outer[i][2];
    c[face_cubic_index({0, 0, 3})] = outer[i][3];
  }
  return out;
}

FaceEval eval_face_cubic(const FaceOrdinates& c, const std::array<Eigen::Vector3d, 3>& v,
                         const Eigen::Vector3d& x) {
  Eigen::Vector3d lam = face_bary(v, x);
  auto gl = face_grad_lambda(v);
  FaceEval out;
  for (int i = 0; i < 10; ++i) {
    const auto& a = kFaceCubic[i];
    double fa = factorial(a[0]) * factorial(a[1]) * factorial(a[2]);
    out.value += c[i] * face_mono(lam, a) / fa;
  }
  out.value *= 6.0;
  for (int a0 = 2; a0 >= 0; --a0)
    for (int a1 = 2 - a0; a1 >= 0; --a1) {
      std::array<int, 3> b = {a0, a1, 2 - a0 - a1};
      double fb = factorial(b[0]) * factorial(b[1]) * factorial(b[2]);
      double base = face_mono(lam, b) / fb;
      Eigen::Vector3d s = Eigen::Vector3d::Zero();
      for (int mu = 0; mu < 3; ++mu) {
        std::array<int, 3> a = b;
        ++a[mu];
        s += c[face_cubic_index(a)] * gl[mu];
      }
      out.grad += base * s;
    }
  out.grad *= 6.0;
  return out;
}

// ---- Algorithm CT3D ----

WFOrdinates ct3d_interpolate(const WFPartition& p, const Dof28& x) {
  const Tet& t = p.macro;
  std::array<Eigen::Vector3d, 4> gvert;
  for (int mu = 0; mu < 4; ++mu)
    gvert[mu] = {x[vertex_gradient_dof(mu, 0)], x[vertex_gradient_dof(mu, 1)],
                 x[vertex_gradient_dof(mu, 2)]};
  // (a) edge midpoint values and gradients by cubic Hermite along each edge
  std::array<double, 6> fmid;
  std::array<Eigen::Vector3d, 6> gmid;
  for (int e = 0; e < 6; ++e) {
    int j = kEdge[e][0], k = kEdge[e][1];
    EdgeFrame fr = t.edge_frame(e);
    double len = (t.q[k] - t.q[j]).norm();
    double dj = gvert[j].dot(fr.tau), dk = gvert[k].dot(fr.tau);
    fmid[e] = 0.5 * (x[j] + x[k]) + len * (dj - dk) / 8.0;
    double dm = 1.5 * (x[k] - x[j]) / len - 0.25 * (dj + dk);
    gmid[e] = dm * fr.tau + x[edge_normal_dof(e, 0)] * fr.nu1 + x[edge_normal_dof(e, 1)] * fr.nu2;
  }
  // (b) quadratic radial layer g anchored at the centre
  std::array<double, 4> gv;
  std::array<double, 6> ge;
  for (int mu = 0; mu < 4; ++mu) gv[mu] = x[mu] - (t.q[mu] - p.ck).dot(gvert[mu]) / 3.0;
  for (int e = 0; e < 6; ++e) ge[e] = fmid[e] + (p.ck - t.edge_midpoint(e)).dot(gmid[e]) / 3.0;
  auto eval_g = [&](const Eigen::Vector3d& pt) {
    Eigen::Vector4d lam = t.barycentric(pt);
    double s = 0.0;
    for (int mu = 0; mu < 4; ++mu) s += gv[mu] * lam[mu] * (2.0 * lam[mu] - 1.0);
    for (int e = 0; e < 6; ++e) s += 4.0 * ge[e] * lam[kEdge[e][0]] * lam[kEdge[e][1]];
    return s;
  };
  WFOrdinates out{};
  // the quadratic ordinates of g per sub-tet become the layer >= 1 ordinates
  for (int s = 0; s < 12; ++s) {
    const Tet& sub = p.sub[s];
    std::array<double, 4> vals;
    for (int i = 0; i < 4; ++i) vals[i] = eval_g(sub.q[i]);
    for (const auto& b : kQuad) {
      double d;
      int two = -1;
      for (int i = 0; i < 4; ++i)
        if (b[i] == 2) two = i;
      if (two >= 0) {
        d = vals[two];
      } else {
        int u = -1, v = -1;
        for (int i = 0; i < 4; ++i)
          if (b[i] == 1) (u < 0 ? u : v) = i;
        double gm = eval_g(0.5 * (sub.q[u] + sub.q[v]));
        d = 0.5 * (4.0 * gm - vals[u] - vals[v]);
      }
      std::array<int, 4> a = b;
      ++a[0];
      out[s][cubic_index(a)] = d;
    }
  }
  // (c) one 2D HCT patch per face fills the layer-zero ordinates
  for (int m = 0; m < 4; ++m) {
    auto fv = face_vertices(m);
    std::array<Eigen::Vector3d, 3> v = {t.q[fv[0]], t.q[fv[1]], t.q[fv[2]]};
    HctDofs hd;
    for (int i = 0; i < 3; ++i) {
      hd.value[i] = x[fv[i]];
      hd.grad[i] = gvert[fv[i]];
    }
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      if (j > k) std::swap(j, k);
      int e = edge_of(fv[j], fv[k]);
      hd.dn[i] = gmid[e].dot(hct_edge_normal(v, i));
    }
    HctOrdinates ho = hct2d_interpolate(v, p.cf[m], hd);
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      if (j > k) std::swap(j, k);
      // sub-tet (c_K, c_m, Q_j, Q_k) for the global pair (fv[j], fv[k])
      int s = -1;
      for (int cand = 0; cand < 12; ++cand)
        if (p.label[cand][0] == m && p.label[cand][1] == fv[j] && p.label[cand][2] == fv[k])
          s = cand;
      for (const auto& g : kFaceCubic)
        out[s][cubic_index({0, g[0], g[1], g[2]})] = ho[i][face_cubic_index(g)];
    }
  }
  return out;
}

Dof28 evaluate_dofs(const WFPartition& p, const WFOrdinates& c) {
  Dof28 x{};
  for (int mu = 0; mu < 4; ++mu) {
    int e = -1;
    for (int cand = 0; cand < 6; ++cand)
      if (kEdge[cand][0] == mu || kEdge[cand][1] == mu) e = cand;
    int s = 2 * e;
    Eval ev = eval_bernstein(c[s], p.sub[s], p.macro.q[mu]);
    x[vertex_value_dof(mu)] = ev.value;
    for (int d = 0; d < 3; ++d) x[vertex_gradient_dof(mu, d)] = ev.grad[d];
  }
  for (int e = 0; e < 6; ++e) {
    EdgeFrame fr = p.macro.edge_frame(e);
    int s = 2 * e;
    Eval ev = eval_bernstein(c[s], p.sub[s], p.macro.edge_midpoint(e));
    x[edge_normal_dof(e, 0)] = ev.grad.dot(fr.nu1);
    x[edge_normal_dof(e, 1)] = ev.grad.dot(fr.nu2);
  }
  return x;
}

// ---- C1 interface checks ----

C1Residual check_c1(const Tet& t1, const Ordinates& c1, const Tet& t2, const Ordinates& c2) {
  C1Residual r;
  for (const auto& g : kFaceCubic) {
    int i = cubic_index({g[0], g[1], g[2], 0});
    r.con1 = std::max(r.con1, std::abs(c1[i] - c2[i]));
  }
  Eigen::Vector3d nu = (t1.q[1] - t1.q[0]).cross(t1.q[2] - t1.q[0]).normalized();
  auto gl1 = t1.grad_lambda();
  auto gl2 = t2.grad_lambda();
  for (const auto& b : kQuad) {
    if (b[3] != 0) continue;
    double s1 = 0.0, s2 = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
      std::array<int, 4> a = b;
      ++a[mu];
      int i = cubic_index(a);
      s1 += c1[i] * nu.dot(gl1[mu]);
      s2 += c2[i] * nu.dot(gl2[mu]);
    }
    r.con2 = std::max(r.con2, std::abs(s1 - s2));
  }
  return r;
}

Ordinates permute_ordinates(const Ordinates& c, const std::array<int, 4>& perm) {
  Ordinates out{};
  for (int i = 0; i < 20; ++i) {
    const auto& b = kCubic[i];
    std::array<int, 4> a{};
    for (int p = 0; p < 4; ++p) a[perm[p]] = b[p];
    out[i] = c[cubic_index(a)];
  }
  return out;
}

Tet permute_tet(const Tet& t, const std::array<int, 4>& perm) {
  Tet out;
  for (int p = 0; p < 4; ++p) out.q[p] = t.q[perm[p]];
  return out;
}

std::vector<InternalFace> internal_faces(const WFPartition& p) {
  std::vector<InternalFace> out;
  // within one cone: sub-tets (c_K, c_m, Q_j, Q_k) sharing one vertex Q
  for (int m = 0; m < 4; ++m) {
    std::vector<int> cone;
    for (int s = 0; s < 12; ++s)
      if (p.label[s][0] == m) cone.push_back(s);
    for (std::size_t i = 0; i < cone.size(); ++i)
      for (std::size_t j = i + 1; j < cone.size(); ++j) {
        int s1 = cone[i], s2 = cone[j];
        int shared = -1;
        for (int v1 : {p.label[s1][1], p.label[s1][2]})
          for (int v2 : {p.label[s2][1], p.label[s2][2]})
            if (v1 == v2) shared = v1;
        InternalFace f;
        f.left = s1;
        f.right = s2;
        f.perm_left = (p.label[s1][1] == shared) ? std::array<int, 4>{0, 1, 2, 3}
                                                 : std::array<int, 4>{0, 1, 3, 2};
        f.perm_right = (p.label[s2][1] == shared) ? std::array<int, 4>{0, 1, 2, 3}
                                                  : std::array<int, 4>{0, 1, 3, 2};
        out.push_back(f);
      }
  }
  // across cones: the two sub-tets over one edge share (c_K, Q_j, Q_k)
  for (int e = 0; e < 6; ++e) {
    InternalFace f;
    f.left = 2 * e;
    f.right = 2 * e + 1;
    f.perm_left = f.perm_right = {0, 2, 3, 1};
    out.push_back(f);
  }
  return out;
}

C1Residual max_c1_residual(const WFPartition& p, const WFOrdinates& c) {
  C1Residual r;
  for (const InternalFace& f : internal_faces(p)) {
    C1Residual fr = check_c1(permute_tet(p.sub[f.left], f.perm_left),
                             permute_ordinates(c[f.left], f.perm_left),
                             permute_tet(p.sub[f.right], f.perm_right),
                             permute_ordinates(c[f.right], f.perm_right));
    r.con1 = std::max(r.con1, fr.con1);
    r.con2 = std::max(r.con2, fr.con2);
  }
  return r;
}

// ---- scaling report ----

ScalingReport basis_scaling_report(const Tet& shape, const std::array<double, 4>& h) {
  ScalingReport rep;
  rep.h = h;
  const TetRule& rule = tet_rule(6);
  for (int level = 0; level < 4; ++level) {
    Tet scaled;
    for (int i = 0; i < 4; ++i) scaled.q[i] = h[level] * shape.q[i];
    WFPartition p = wf_partition(scaled);
    rep.eps_center[level] = p.eps_center;
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int dof = 0; dof < 28; ++dof) {
      Dof28 unit{};
      unit[dof] = 1.0;
      WFOrdinates c = ct3d_interpolate(p, unit);
      double l2 = 0.0, h1 = 0.0, h2 = 0.0;
      for (int s = 0; s < 12; ++s) {
        double vol = p.sub[s].volume();
        for (std::size_t qp = 0; qp < rule.w.size(); ++qp) {
          Eigen::Vector3d pt = Eigen::Vector3d::Zero();
          for (int i = 0; i < 4; ++i) pt += rule.bary[qp][i] * p.sub[s].q[i];
          Eval ev = eval_bernstein(c[s], p.sub[s], pt);
          Eigen::Matrix3d hess = eval_bernstein_hessian(c[s], p.sub[s], pt);
          double w = rule.w[qp] * vol;
          l2 += w * ev.value * ev.value;
          h1 += w * ev.grad.squaredNorm();
          h2 += w * hess.squaredNorm();
        }
      }
      rep.norm[dof][0][level] = std::sqrt(l2);
      rep.norm[dof][1][level] = std::sqrt(h1);
      rep.norm[dof][2][level] = std::sqrt(h2);
    }
  }
  for (int dof = 0; dof < 28; ++dof)
    for (int s = 0; s < 3; ++s) {
      double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
      for (int level = 0; level < 4; ++level) {
        double tl = std::log2(h[level]);
        double yl = std::log2(rep.norm[dof][s][level]);
        st += tl;
        sy += yl;
        stt += tl * tl;
        sty += tl * yl;
      }
      rep.exponent[dof][s] = (4.0 * sty - st * sy) / (4.0 * stt - st * st);
    }
  return rep;
}

// ---- correction functions ----

namespace {

// closest-point distance from p to the triangle (a, b, c)
double point_triangle_dist(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                           const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();
  Eigen::Vector3d bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (ap - (d1 / (d1 - d3)) * ab).norm();
  Eigen::Vector3d cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (ap - (d2 / (d2 - d6)) * ac).norm();
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

bool same_point(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol) {
  return (a - b).norm() <= tol;
}

bool same_triangle(const std::array<Eigen::Vector3d, 3>& f, const std::array<Eigen::Vector3d, 3>& g,
                   double tol) {
  std::array<int, 3> idx = {0, 1, 2};
  std::sort(idx.begin(), idx.end());
  do {
    if (same_point(f[0], g[idx[0]], tol) && same_point(f[1], g[idx[1]], tol) &&
        same_point(f[2], g[idx[2]], tol))
      return true;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return false;
}

std::array<Eigen::Vector3d, 3> tet_face(const Tet& t, int m) {
  auto v = face_vertices(m);
  return {t.q[v[0]], t.q[v[1]], t.q[v[2]]};
}

}  // namespace

XiBall make_xi_ball(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const std::vector<Tet>& patch) {
  if (patch.empty()) throw std::runtime_error("empty edge patch");
  XiBall ball;
  ball.mid = 0.5 * (a + b);
  ball.length = (b - a).norm();
  double scale = ball.length;
  for (const Tet& t : patch) scale = std::max(scale, t.diameter());
  double tol = 1e-9 * scale;
  // patch boundary faces appear exactly once
  double dist = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < patch.size(); ++i)
    for (int m = 0; m < 4; ++m) {
      auto f = tet_face(patch[i], m);
      bool internal = false;
      for (std::size_t j = 0; j < patch.size() && !internal; ++j)
        for (int mm = 0; mm < 4 && !internal; ++mm) {
          if (i == j && m == mm) continue;
          internal = same_triangle(f, tet_face(patch[j], mm), tol);
        }
      if (!internal) dist = std::min(dist, point_triangle_dist(ball.mid, f[0], f[1], f[2]));
    }
  ball.radius = 0.5 * std::min(dist, 0.5 * ball.length);
  if (ball.radius <= tol) throw std::runtime_error("edge midpoint on the patch boundary");
  return ball;
}

double eval_xi(const XiBall& b, const Eigen::Vector3d& x) {
  double r = (x - b.mid).norm();
  if (r >= b.radius) return 0.0;
  double s = r / b.radius;
  return (b.length / b.radius) * (1.0 - 3.0 * s * s + 2.0 * s * s * s);
}

double xi_l2_norm(const XiBall& b) {
  return b.length * std::sqrt(38.0 * M_PI * b.radius / 315.0);
}

FacePatch make_face_patch(const Tet& plus, const Tet& minus) {
  double tol = 1e-9 * std::max(plus.diameter(), minus.diameter());
  FacePatch fp;
  fp.plus = plus;
  fp.minus = minus;
  for (int m = 0; m < 4 && fp.face_plus < 0; ++m)
    for (int mm = 0; mm < 4; ++mm)
      if (same_triangle(tet_face(plus, m), tet_face(minus, mm), tol)) {
        fp.face_plus = m;
        fp.face_minus = mm;
        break;
      }
  if (fp.face_plus < 0) throw std::runtime_error("tetrahedra do not share a face");
  fp.nu = plus.face_normal(fp.face_plus);
  auto f = tet_face(plus, fp.face_plus);
  if (fp.nu.dot(minus.q[fp.face_minus] - f[0]) <= 0.0)
    throw std::runtime_error("face patch tetrahedra overlap");
  return fp;
}

namespace {

// one-sided corrector: sign * 7!/2 * dist(z4, F) * (l1 l2 l3)^2 l4
struct ZetaSide {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  bool inside = false;
};

ZetaSide zeta_side(const Tet& t, int m, double sign, const Eigen::Vector3d& x) {
  ZetaSide out;
  Eigen::Vector4d lam = t.barycentric(x);
  if (lam.minCoeff() < -1e-12) return out;
  out.inside = true;
  auto fv = face_vertices(m);
  double d = 3.0 * t.volume() / t.face_area(m);
  double c = sign * 2520.0 * d;  // 7!/2 = 2520
  double la = lam[fv[0]], lb = lam[fv[1]], lc = lam[fv[2]], lm = lam[m];
  out.value = c * la * la * lb * lb * lc * lc * lm;
  auto gl = t.grad_lambda();
  out.grad = c * (2.0 * la * lb * lb * lc * lc * lm * gl[fv[0]] +
                  2.0 * la * la * lb * lc * lc * lm * gl[fv[1]] +
                  2.0 * la * la * lb * lb * lc * lm * gl[fv[2]] +
                  la * la * lb * lb * lc * lc * gl[m]);
  return out;
}

}  // namespace

double eval_zeta(const FacePatch& fp, const Eigen::Vector3d& x) {
  // sign = -(nu_T . nu) so the mean normal derivative over the shared face
  // equals one with orientation nu
  ZetaSide s = zeta_side(fp.plus, fp.face_plus, -1.0, x);
  if (s.inside) return s.value;
  s = zeta_side(fp.minus, fp.face_minus, 1.0, x);
  return s.value;
}

Eigen::Vector3d eval_zeta_grad(const FacePatch& fp, const Eigen::Vector3d& x) {
  ZetaSide s = zeta_side(fp.plus, fp.face_plus, -1.0, x);
  if (s.inside) return s.grad;
  s = zeta_side(fp.minus, fp.face_minus, 1.0, x);
  return s.grad;
}

double zeta_l2_norm(const Tet& t, int face) {
  double d = 3.0 * t.volume() / t.face_area(face);
  return 6.0 * d * std::sqrt(t.volume() / 12155.0);
}

double eval_bubble(const Tet& t, const Eigen::Vector3d& x) {
  Eigen::Vector4d lam = t.barycentric(x);
  double p = 1.0;
  for (int i = 0; i < 4; ++i) p *= lam[i] * lam[i];
  return kBubbleScale * p;
}

Eigen::Vector3d eval_bubble_grad(const Tet& t, const Eigen::Vector3d& x) {
  Eigen::Vector4d lam = t.barycentric(x);
  auto gl = t.grad_lambda();
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int k = 0; k < 4; ++k) {
    double p = 2.0 * lam[k];
    for (int i = 0; i < 4; ++i)
      if (i != k) p *= lam[i] * lam[i];
    g += p * gl[k];
  }
  return kBubbleScale * g;
}

Eigen::VectorXd riesz_vt(const Tet& t, const std::function<double(const Eigen::Vector3d&)>& g) {
  double vol = t.volume();
  if (vol <= 0.0) throw std::runtime_error("degenerate tetrahedron");
  Eigen::MatrixXd gram(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = i; j < 10; ++j) {
      std::array<int, 4> a;
      for (int k = 0; k < 4; ++k) a[k] = 2 + kQuad[i][k] + kQuad[j][k];
      gram(i, j) = gram(j, i) = kBubbleScale * vol * tet_mono_mean(a);
    }
  const TetRule& rule = tet_rule(12);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(10);
  for (std::size_t qp = 0; qp < rule.w.size(); ++qp) {
    Eigen::Vector3d pt = Eigen::Vector3d::Zero();
    Eigen::Vector4d lam;
    for (int i = 0; i < 4; ++i) {
      pt += rule.bary[qp][i] * t.q[i];
      lam[i] = rule.bary[qp][i];
    }
    double w = rule.w[qp] * vol * g(pt);
    for (int i = 0; i < 10; ++i) rhs[i] += w * mono(lam, kQuad[i]);
  }
  return gram.ldlt().solve(rhs);
}

double eval_p2(const Eigen::VectorXd& coef, const Tet& t, const Eigen::Vector3d& x) {
  Eigen::Vector4d lam = t.barycentric(x);
  double s = 0.0;
  for (int i = 0; i < 10; ++i) s += coef[i] * mono(lam, kQuad[i]);
  return s;
}

}  // namespace glb::wf3d
