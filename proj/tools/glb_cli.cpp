// Command line front end: eigenvalue bound tables on uniform refinements,
// adaptive runs with history output, the constant tables, and a randomized
// self-check of the Worsey-Farin kit.
//
// Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical
// failure. GLB_THREADS caps the OpenMP thread count used for assembly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glb/afem.hpp"
#include "glb/crlaplace.hpp"
#include "glb/gevp.hpp"
#include "glb/mesh.hpp"
#include "glb/morley.hpp"
#include "glb/quadrature.hpp"
#include "glb/wf3d.hpp"
#include "json.hpp"

#ifdef GLB_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

void apply_thread_env() {
#ifdef GLB_HAVE_OPENMP
  if (const char* s = std::getenv("GLB_THREADS")) {
    int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

// Accepts the builtin names plus common spellings ("l_shape", "square", ...).
std::optional<std::string> resolve_domain(const std::string& raw) {
  std::string s;
  for (char c : raw) s += (c == '-') ? '_' : static_cast<char>(std::tolower(c));
  static const std::map<std::string, std::string> alias = {
      {"unit_square", "unit_square"},   {"square", "unit_square"},
      {"lshape", "lshape"},             {"l_shape", "lshape"},
      {"dumbbell_slit", "dumbbell_slit"}, {"dumbbell", "dumbbell_slit"},
      {"four_slit", "four_slit"},       {"fourslit", "four_slit"}};
  auto it = alias.find(s);
  if (it == alias.end()) return std::nullopt;
  return it->second;
}

// Published reference eigenvalues used for error columns when no --ref-lambda
// is given. Kept as data so a better reference can be swapped in from the
// command line without touching the solver.
double default_reference(const std::string& domain, int k) {
  static const std::map<std::pair<std::string, int>, double> table = {
      {{"dumbbell_slit", 1}, 80.93261350},
      {{"dumbbell_slit", 4}, 386.80177939},
      {{"lshape", 1}, 418.97504246688220},
      {{"four_slit", 1}, 830.21478777},
      {{"four_slit", 3}, 1125.12791932},
      {{"four_slit", 4}, 1125.12793193}};
  auto it = table.find({domain, k});
  return it == table.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

int with_output(const std::string& path, const std::function<int(std::ostream&)>& body) {
  if (path.empty()) return body(std::cout);
  std::ofstream os(path);
  if (!os) {
    std::cerr << "glb: cannot open output file '" << path << "'\n";
    return kExitUsage;
  }
  return body(os);
}

std::string swap_extension(const std::string& path, const std::string& ext) {
  auto slash = path.find_last_of('/');
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + ext;
  return path.substr(0, dot) + ext;
}

// ---------------------------------------------------------------- solve ----

struct SolveArgs {
  std::string domain;
  std::string method = "stabilised";
  int k = 1;
  int levels = 4;
  long max_dofs = 2000000;
  double tol = 1e-13;
  std::string out;
};

int cmd_solve(const SolveArgs& a) {
  return with_output(a.out, [&](std::ostream& os) {
    os.precision(17);
    glb::Triangulation2D mesh = glb::build_domain(a.domain);
    if (a.method == "morley")
      os << "level,nT,hmax,ndof,k,lambdaM\n";
    else if (a.method == "cr")
      os << "level,nT,hmax,ndof,k,lambdaCR,lambdaH,glb,cond\n";
    else
      os << "level,nT,hmax,ndof,k,lambdaM,lambdaH,glb,cond\n";
    for (int level = 0; level <= a.levels; ++level) {
      if (level > 0) mesh = glb::refine_uniform(mesh);
      if (a.method == "cr") {
        auto dm = glb::cr_dofs(mesh);
        if (dm.ndof > a.max_dofs && level > 0) break;
        glb::GlbOptions opts;
        opts.k = a.k;
        opts.fp_tol = a.tol;
        auto res = glb::solve_cr_glb(mesh, dm, opts);
        const auto& m = res.modes.at(a.k - 1);
        os << level << ',' << mesh.nt() << ',' << res.hmax << ',' << res.ndof << ',' << a.k
           << ',' << m.lambda_CR << ',' << m.lambda_h << ',' << m.glb << ','
           << (m.condition_ok ? 1 : 0) << '\n';
      } else {
        auto dm = glb::morley_dofs(mesh);
        if (dm.ndof > a.max_dofs && level > 0) break;
        if (a.method == "morley") {
          auto pencil = glb::assemble_morley_pencil(mesh, dm);
          auto eig = glb::gevp_smallest(pencil.K, pencil.M, a.k);
          os << level << ',' << mesh.nt() << ',' << glb::hmax(mesh) << ',' << dm.ndof << ','
             << a.k << ',' << eig.lambda(a.k - 1) << '\n';
        } else {
          glb::GlbOptions opts;
          opts.k = a.k;
          opts.fp_tol = a.tol;
          auto res = glb::solve_glb(mesh, dm, opts);
          const auto& m = res.modes.at(a.k - 1);
          os << level << ',' << mesh.nt() << ',' << res.hmax << ',' << res.ndof << ',' << a.k
             << ',' << m.lambda_M << ',' << m.lambda_h << ',' << m.glb << ','
             << (m.condition_ok ? 1 : 0) << '\n';
        }
      }
    }
    return 0;
  });
}

// ----------------------------------------------------------------- afem ----

struct AfemArgs {
  std::string domain;
  std::string method = "stabilised";
  int k = 1;
  double theta = 0.5;
  long max_dofs = 200000;
  double tol = 1e-13;
  double ref_lambda = std::numeric_limits<double>::quiet_NaN();
  std::string out;
};

int cmd_afem(const AfemArgs& a) {
  glb::AfemOptions opts;
  opts.k = a.k;
  opts.theta = a.theta;
  opts.max_dofs = static_cast<int>(a.max_dofs);
  opts.glb.k = a.k;
  opts.glb.fp_tol = a.tol;
  auto res = glb::afem_loop(glb::build_domain(a.domain), opts);

  int rc = with_output(a.out, [&](std::ostream& os) {
    glb::write_history_csv(os, res.rows);
    return 0;
  });
  if (rc != 0) return rc;

  double ref = std::isnan(a.ref_lambda) ? default_reference(a.domain, a.k) : a.ref_lambda;
  if (!std::isnan(ref) && !a.out.empty()) {
    std::string dat = swap_extension(a.out, ".dat");
    std::ofstream os(dat);
    if (!os) {
      std::cerr << "glb: cannot open output file '" << dat << "'\n";
      return kExitUsage;
    }
    os.precision(17);
    os << "# nT  ref-glb  ref-lambdaH   (rows with a valid bound; ref = " << ref << ")\n";
    for (const auto& r : res.rows) {
      if (!r.condition_ok) continue;
      os << r.nT << ' ' << ref - r.glb << ' ' << ref - r.lambda_h << '\n';
    }
  }
  return 0;
}

// ------------------------------------------------------------ constants ----

int cmd_constants(const std::string& out) {
  return with_output(out, [&](std::ostream& os) {
    os.precision(17);
    double k22 = glb::kappa2(2);
    os << "constant        n  value\n";
    os << "j_1,1           -  " << glb::bessel_j11() << '\n';
    os << "kappa_1         2  " << glb::kappa1(2) << '\n';
    os << "kappa_1         3  " << glb::kappa1(3) << '\n';
    os << "kappa_2         2  " << k22 << '\n';
    os << "kappa_2         3  " << glb::kappa2(3) << '\n';
    os << "1/kappa_2^2     2  " << 1.0 / (k22 * k22) << '\n';
    os << "1/kappa_2^2     3  " << 1.0 / (glb::kappa2(3) * glb::kappa2(3)) << '\n';
    return 0;
  });
}

// ---------------------------------------------------------- wf3d-verify ----

namespace wf = glb::wf3d;

wf::Tet random_tet(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    wf::Tet t;
    for (auto& q : t.q) q = Eigen::Vector3d(u(rng), u(rng), u(rng));
    if (t.volume() > 0.01) return t;
  }
}

std::array<std::optional<Eigen::Vector3d>, 4> random_neighbor_centers(const wf::Tet& t,
                                                                      std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> stretch(1.05, 2.0);
  Eigen::Vector3d ck = wf::incircle_center(t);
  std::array<std::optional<Eigen::Vector3d>, 4> nb;
  for (int m = 0; m < 4; ++m) {
    if (u(rng) > 0.7) continue;
    double w0 = 0.1 + u(rng), w1 = 0.1 + u(rng), w2 = 0.1 + u(rng);
    double ws = w0 + w1 + w2;
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    int j = 0;
    for (int v = 0; v < 4; ++v) {
      if (v == m) continue;
      p += (j == 0 ? w0 : j == 1 ? w1 : w2) / ws * t.q[v];
      ++j;
    }
    nb[m] = ck + stretch(rng) * (p - ck);
  }
  return nb;
}

Eigen::Vector3d random_interior_point(const wf::Tet& t, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::Vector4d w(u(rng), u(rng), u(rng), u(rng));
  w /= w.sum();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int v = 0; v < 4; ++v) p += w(v) * t.q[v];
  return p;
}

struct Poly3 {
  std::vector<std::array<int, 3>> exps;
  std::vector<double> coef;

  static Poly3 random(std::mt19937& rng, int degree) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Poly3 p;
    for (int a = 0; a + 0 <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        for (int c = 0; a + b + c <= degree; ++c) {
          p.exps.push_back({a, b, c});
          p.coef.push_back(u(rng));
        }
    return p;
  }

  double value(const Eigen::Vector3d& x) const {
    double s = 0.0;
    for (size_t i = 0; i < exps.size(); ++i)
      s += coef[i] * std::pow(x.x(), exps[i][0]) * std::pow(x.y(), exps[i][1]) *
           std::pow(x.z(), exps[i][2]);
    return s;
  }

  Eigen::Vector3d grad(const Eigen::Vector3d& x) const {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < exps.size(); ++i) {
      const auto& e = exps[i];
      if (e[0] > 0)
        g.x() += coef[i] * e[0] * std::pow(x.x(), e[0] - 1) * std::pow(x.y(), e[1]) *
                 std::pow(x.z(), e[2]);
      if (e[1] > 0)
        g.y() += coef[i] * e[1] * std::pow(x.x(), e[0]) * std::pow(x.y(), e[1] - 1) *
                 std::pow(x.z(), e[2]);
      if (e[2] > 0)
        g.z() += coef[i] * e[2] * std::pow(x.x(), e[0]) * std::pow(x.y(), e[1]) *
                 std::pow(x.z(), e[2] - 1);
    }
    return g;
  }
};

double tet_integral(const wf::Tet& t, int degree,
                    const std::function<double(const Eigen::Vector3d&)>& f) {
  auto rule = glb::tet_rule(degree);
  double s = 0.0;
  for (size_t i = 0; i < rule.bary.size(); ++i) {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (int v = 0; v < 4; ++v) x += rule.bary[i][v] * t.q[v];
    s += rule.w[i] * f(x);
  }
  return s * t.volume();
}

// Mean of f over the 3D-embedded triangle (v0, v1, v2).
double tri_mean(const std::array<Eigen::Vector3d, 3>& v, int degree,
                const std::function<double(const Eigen::Vector3d&)>& f) {
  auto rule = glb::tri_rule(degree);
  double s = 0.0;
  for (size_t i = 0; i < rule.bary.size(); ++i) {
    Eigen::Vector3d x =
        rule.bary[i][0] * v[0] + rule.bary[i][1] * v[1] + rule.bary[i][2] * v[2];
    s += rule.w[i] * f(x);
  }
  return s;
}

struct Wf3dReport {
  double unisolvence = 0.0;
  double cubic = 0.0;
  double con1 = 0.0, con2 = 0.0;
  double cross_tet = 0.0;
  std::array<std::array<double, 2>, 3> value_exp{}, deriv_exp{};  // [s][min,max]
  double scaling_dev = 0.0;
  double xi_mean_err = 0.0;
  double zeta_dual_err = 0.0;
  double bubble_peak_err = 0.0;
  double riesz_residual = 0.0;
};

// Two macro tets sharing the face z = 0; the shared face is local face 3 in
// both, and each partition routes its face centre through the neighbour's
// insphere centre so the split points coincide.
struct TetPair {
  wf::WFPartition plus, minus;
};

TetPair make_pair_partitions() {
  wf::Tet tp, tm;
  tp.q = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
          Eigen::Vector3d(0.3, 0.3, 0.8)};
  tm.q = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
          Eigen::Vector3d(0.25, 0.35, -0.7)};
  std::array<std::optional<Eigen::Vector3d>, 4> nbp{}, nbm{};
  nbp[3] = wf::incircle_center(tm);
  nbm[3] = wf::incircle_center(tp);
  return {wf::wf_partition(tp, nbp), wf::wf_partition(tm, nbm)};
}

void run_pair_check(Wf3dReport& rep, std::mt19937& rng) {
  TetPair pair = make_pair_partitions();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  wf::Dof28 dp{}, dm{};
  for (double& d : dp) d = u(rng);
  for (double& d : dm) d = u(rng);
  // Shared data: values and gradients at the three face vertices, and both
  // frame-normal dofs on the face edges (0,1), (0,2), (1,2). The edge frames
  // agree because both tets list the shared vertices first in the same order.
  for (int mu = 0; mu < 3; ++mu) {
    dm[wf::vertex_value_dof(mu)] = dp[wf::vertex_value_dof(mu)];
    for (int ax = 0; ax < 3; ++ax)
      dm[wf::vertex_gradient_dof(mu, ax)] = dp[wf::vertex_gradient_dof(mu, ax)];
  }
  for (int e : {0, 1, 3})
    for (int m = 0; m < 2; ++m)
      dm[wf::edge_normal_dof(e, m)] = dp[wf::edge_normal_dof(e, m)];
  auto cp = wf::ct3d_interpolate(pair.plus, dp);
  auto cm = wf::ct3d_interpolate(pair.minus, dm);
  std::uniform_real_distribution<double> b(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d w(b(rng), b(rng), b(rng));
    w /= w.sum();
    Eigen::Vector3d x =
        w(0) * pair.plus.macro.q[0] + w(1) * pair.plus.macro.q[1] + w(2) * pair.plus.macro.q[2];
    auto ep = wf::eval_wf(pair.plus, cp, x);
    auto em = wf::eval_wf(pair.minus, cm, x);
    rep.cross_tet = std::max(rep.cross_tet, std::abs(ep.value - em.value));
    rep.cross_tet = std::max(rep.cross_tet, (ep.grad - em.grad).norm());
  }
}

void run_scaling_check(Wf3dReport& rep) {
  wf::Tet shape;
  shape.q = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0.1, 0),
             Eigen::Vector3d(0.2, 1.1, 0.05), Eigen::Vector3d(0.3, 0.2, 0.9)};
  auto sr = wf::basis_scaling_report(shape);
  const std::array<double, 3> want_value = {1.5, 0.5, -0.5};
  const std::array<double, 3> want_deriv = {2.5, 1.5, 0.5};
  for (int s = 0; s < 3; ++s) {
    rep.value_exp[s] = {1e30, -1e30};
    rep.deriv_exp[s] = {1e30, -1e30};
  }
  for (int dof = 0; dof < 28; ++dof) {
    bool is_value = dof < 4;
    for (int s = 0; s < 3; ++s) {
      double e = sr.exponent[dof][s];
      auto& range = is_value ? rep.value_exp[s] : rep.deriv_exp[s];
      range[0] = std::min(range[0], e);
      range[1] = std::max(range[1], e);
      double want = is_value ? want_value[s] : want_deriv[s];
      rep.scaling_dev = std::max(rep.scaling_dev, std::abs(e - want));
    }
  }
}

void run_correction_checks(Wf3dReport& rep, std::mt19937& rng) {
  // Edge bump on a ring of six tets around the segment (0,0,0)-(0,0,1).
  Eigen::Vector3d a(0, 0, 0), b(0, 0, 1);
  std::vector<wf::Tet> ring;
  int n = 6;
  for (int i = 0; i < n; ++i) {
    double t0 = 2.0 * M_PI * i / n, t1 = 2.0 * M_PI * (i + 1) / n;
    wf::Tet t;
    t.q = {a, b, Eigen::Vector3d(std::cos(t0), std::sin(t0), 0.4),
           Eigen::Vector3d(std::cos(t1), std::sin(t1), 0.4)};
    if (t.volume() <= 0.0) std::swap(t.q[2], t.q[3]);
    ring.push_back(t);
  }
  auto ball = wf::make_xi_ball(a, b, ring);
  // The trace along the edge vanishes outside |t - mid| <= R and is cubic on
  // either half, so one Gauss panel per half integrates it exactly.
  auto er = glb::edge_rule_5();
  double mean = 0.0;
  double mid = 0.5, r = ball.radius;
  for (int half = 0; half < 2; ++half) {
    double lo = half == 0 ? mid - r : mid;
    for (size_t i = 0; i < er.t.size(); ++i) {
      double s = lo + er.t[i] * r;
      mean += r * er.w[i] * wf::eval_xi(ball, a + s * (b - a));
    }
  }
  rep.xi_mean_err = std::abs(mean - 1.0);

  // Face corrector duality on the two-tet patch.
  TetPair pair = make_pair_partitions();
  auto fp = wf::make_face_patch(pair.plus.macro, pair.minus.macro);
  auto dual = [&](const wf::Tet& t, int face, const Eigen::Vector3d& nu) {
    std::array<Eigen::Vector3d, 3> v;
    int j = 0;
    for (int m = 0; m < 4; ++m)
      if (m != face) v[j++] = t.q[m];
    return tri_mean(v, 8, [&](const Eigen::Vector3d& x) {
      return wf::eval_zeta_grad(fp, x).dot(nu);
    });
  };
  rep.zeta_dual_err = std::abs(dual(fp.plus, fp.face_plus, fp.nu) - 1.0);
  for (int m = 0; m < 4; ++m) {
    if (m != fp.face_plus)
      rep.zeta_dual_err =
          std::max(rep.zeta_dual_err, std::abs(dual(fp.plus, m, fp.plus.face_normal(m))));
    if (m != fp.face_minus)
      rep.zeta_dual_err =
          std::max(rep.zeta_dual_err, std::abs(dual(fp.minus, m, fp.minus.face_normal(m))));
  }

  // Bubble peak at the centroid, nowhere above one.
  wf::Tet t = random_tet(rng);
  rep.bubble_peak_err = std::abs(wf::eval_bubble(t, t.centroid()) - 1.0);
  for (int i = 0; i < 200; ++i) {
    double v = wf::eval_bubble(t, random_interior_point(t, rng));
    rep.bubble_peak_err = std::max(rep.bubble_peak_err, std::max(0.0, v - 1.0));
  }

  // Riesz representation: (b v, w) = (g, w) for all quadratic w.
  for (int trial = 0; trial < 5; ++trial) {
    wf::Tet rt = random_tet(rng);
    Poly3 g = Poly3::random(rng, 2);
    Eigen::VectorXd coef = wf::riesz_vt(rt, [&](const Eigen::Vector3d& x) { return g.value(x); });
    for (int i = 0; i < 10; ++i) {
      auto w = [&](const Eigen::Vector3d& x) {
        Eigen::Vector4d lam = rt.barycentric(x);
        double m = 1.0;
        for (int v = 0; v < 4; ++v)
          for (int p = 0; p < wf::kQuad[i][v]; ++p) m *= lam(v);
        return m;
      };
      double lhs = tet_integral(rt, 14, [&](const Eigen::Vector3d& x) {
        return wf::eval_bubble(rt, x) * wf::eval_p2(coef, rt, x) * w(x);
      });
      double rhs = tet_integral(rt, 14, [&](const Eigen::Vector3d& x) { return g.value(x) * w(x); });
      rep.riesz_residual = std::max(rep.riesz_residual, std::abs(lhs - rhs));
    }
  }
}

struct Wf3dArgs {
  unsigned seed = 1;
  int trials = 50;
  std::string out;
};

int cmd_wf3d_verify(const Wf3dArgs& a) {
  std::mt19937 rng(a.seed);
  Wf3dReport rep;

  for (int trial = 0; trial < a.trials; ++trial) {
    wf::Tet t = random_tet(rng);
    std::array<std::optional<Eigen::Vector3d>, 4> nb{};
    if (trial % 5 != 0) nb = random_neighbor_centers(t, rng);
    auto part = wf::wf_partition(t, nb);

    // Unisolvence: interpolating each unit dof vector must reproduce it.
    for (int j = 0; j < 28; ++j) {
      wf::Dof28 unit{};
      unit[j] = 1.0;
      auto ord = wf::ct3d_interpolate(part, unit);
      auto back = wf::evaluate_dofs(part, ord);
      for (int i = 0; i < 28; ++i)
        rep.unisolvence = std::max(rep.unisolvence, std::abs(back[i] - (i == j ? 1.0 : 0.0)));
    }

    // Cubic reproduction and the C1 residual of the interpolant.
    Poly3 p = Poly3::random(rng, 3);
    auto dofs = wf::sample_dofs(
        t, [&](const Eigen::Vector3d& x) { return p.value(x); },
        [&](const Eigen::Vector3d& x) { return p.grad(x); });
    auto ord = wf::ct3d_interpolate(part, dofs);
    for (int i = 0; i < 20; ++i) {
      Eigen::Vector3d x = random_interior_point(t, rng);
      auto ev = wf::eval_wf(part, ord, x);
      rep.cubic = std::max(rep.cubic, std::abs(ev.value - p.value(x)));
      rep.cubic = std::max(rep.cubic, (ev.grad - p.grad(x)).norm());
    }
    auto con = wf::max_c1_residual(part, ord);
    rep.con1 = std::max(rep.con1, con.con1);
    rep.con2 = std::max(rep.con2, con.con2);

    // Arbitrary dof data must still interpolate to a C1 function.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    wf::Dof28 rnd{};
    for (double& d : rnd) d = u(rng);
    auto con_r = wf::max_c1_residual(part, wf::ct3d_interpolate(part, rnd));
    rep.con1 = std::max(rep.con1, con_r.con1);
    rep.con2 = std::max(rep.con2, con_r.con2);
  }

  run_pair_check(rep, rng);
  run_scaling_check(rep);
  run_correction_checks(rep, rng);

  nlohmann::json j;
  j["seed"] = a.seed;
  j["trials"] = a.trials;
  j["unisolvence_residual"] = rep.unisolvence;
  j["cubic_reproduction_error"] = rep.cubic;
  j["c1_residual"] = {{"con1", rep.con1}, {"con2", rep.con2}};
  j["cross_tet_residual"] = rep.cross_tet;
  j["scaling"] = {{"value_exponents_l2_h1_h2", rep.value_exp},
                  {"derivative_exponents_l2_h1_h2", rep.deriv_exp},
                  {"max_deviation", rep.scaling_dev}};
  j["corrections"] = {{"xi_edge_mean_error", rep.xi_mean_err},
                      {"zeta_duality_error", rep.zeta_dual_err},
                      {"bubble_peak_error", rep.bubble_peak_err},
                      {"riesz_residual", rep.riesz_residual}};
  bool ok = rep.unisolvence <= 1e-9 && rep.cubic <= 1e-9 && rep.con1 <= 1e-9 &&
            rep.con2 <= 1e-8 && rep.cross_tet <= 1e-9 && rep.scaling_dev <= 0.05 &&
            rep.xi_mean_err <= 1e-8 && rep.zeta_dual_err <= 1e-8 &&
            rep.bubble_peak_err <= 1e-12 && rep.riesz_residual <= 1e-10;
  j["ok"] = ok;

  int rc = with_output(a.out, [&](std::ostream& os) {
    os << j.dump(2) << '\n';
    return 0;
  });
  if (rc != 0) return rc;
  return ok ? 0 : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();

  CLI::App app{"guaranteed lower eigenvalue bounds (bi-Laplacian Morley / Laplacian CR)"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "bound table on uniform refinements");
  solve->add_option("--domain", sa.domain, "unit_square | lshape | dumbbell_slit | four_slit")
      ->required();
  solve->add_option("--method", sa.method, "stabilised | morley | cr")
      ->check(CLI::IsMember({"stabilised", "morley", "cr"}));
  solve->add_option("--k", sa.k, "eigenvalue index (1-based)")->check(CLI::Range(1, 1 << 20));
  solve->add_option("--levels", sa.levels, "number of uniform refinements")
      ->check(CLI::Range(0, 64));
  solve->add_option("--max-dofs", sa.max_dofs, "stop refining beyond this dof count")
      ->check(CLI::Range(1L, 1L << 40));
  solve->add_option("--tol", sa.tol, "fixed point tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--out", sa.out, "CSV output path (default stdout)");

  AfemArgs aa;
  auto* afem = app.add_subcommand("afem", "adaptive refinement history");
  afem->add_option("--domain", aa.domain, "unit_square | lshape | dumbbell_slit | four_slit")
      ->required();
  afem->add_option("--method", aa.method, "stabilised (only choice)");
  afem->add_option("--k", aa.k, "eigenvalue index (1-based)")->check(CLI::Range(1, 1 << 20));
  afem->add_option("--theta", aa.theta, "Doerfler parameter in (0,1]");
  afem->add_option("--max-dofs", aa.max_dofs, "dof budget")->check(CLI::Range(1L, 1L << 40));
  afem->add_option("--tol", aa.tol, "fixed point tolerance")->check(CLI::PositiveNumber);
  afem->add_option("--ref-lambda", aa.ref_lambda,
                   "reference eigenvalue for the gnuplot error file "
                   "(default: published value when known)");
  afem->add_option("--out", aa.out,
                   "history CSV path (default stdout); with a reference, errors go to "
                   "the same path with extension .dat");

  std::string const_out;
  auto* consts = app.add_subcommand("constants", "print the certified constant table");
  consts->add_option("--out", const_out, "output path (default stdout)");

  Wf3dArgs wa;
  auto* wf3d = app.add_subcommand("wf3d-verify", "randomized Worsey-Farin self-check (JSON)");
  wf3d->add_option("--seed", wa.seed, "random seed");
  wf3d->add_option("--trials", wa.trials, "number of random tetrahedra")
      ->check(CLI::Range(1, 100000));
  wf3d->add_option("--out", wa.out, "JSON output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve || *afem) {
      std::string& dom = *solve ? sa.domain : aa.domain;
      auto resolved = resolve_domain(dom);
      if (!resolved) {
        std::cerr << "glb: unknown domain '" << dom
                  << "' (use unit_square, lshape, dumbbell_slit or four_slit)\n";
        return kExitUsage;
      }
      dom = *resolved;
    }
    if (*solve) return cmd_solve(sa);
    if (*afem) {
      if (aa.method != "stabilised") {
        std::cerr << "glb: afem supports only --method stabilised\n";
        return kExitUsage;
      }
      if (!(aa.theta > 0.0 && aa.theta <= 1.0)) {
        std::cerr << "glb: --theta must lie in (0, 1]\n";
        return kExitUsage;
      }
      return cmd_afem(aa);
    }
    if (*consts) return cmd_constants(const_out);
    if (*wf3d) return cmd_wf3d_verify(wa);
  } catch (const std::exception& e) {
    std::cerr << "glb: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
