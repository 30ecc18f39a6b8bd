#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "glb/afem.hpp"
#include "glb/gevp.hpp"
#include "glb/mesh.hpp"
#include "glb/morley.hpp"
#include "glb/quadrature.hpp"

using namespace glb;

namespace {

Eigen::MatrixXd interpolant_coeffs(const Triangulation2D& mesh, const MorleyDofMap& dm,
                                   const MorleyInterpolant& ip) {
  Eigen::MatrixXd coeffs(mesh.nt(), 6);
  for (int t = 0; t < mesh.nt(); ++t)
    for (int k = 0; k < 3; ++k) {
      coeffs(t, k) = ip.vertex_vals(mesh.tri[t][k]);
      coeffs(t, 3 + k) = dm.sigma[t][k] * ip.edge_means(dm.et.tri_edges[t][k]);
    }
  return coeffs;
}

// brute-force jump term: Gauss quadrature along each edge of |J tau|^2 with
// the jump assembled from the per-triangle Hessians of the coefficients
double jump_term_oracle(const Triangulation2D& mesh, const MorleyDofMap& dm,
                        const Eigen::MatrixXd& coeffs, int t, bool include_boundary) {
  const EdgeRule& er = edge_rule(5);
  std::vector<Eigen::Matrix2d> hess(mesh.nt());
  for (int s = 0; s < mesh.nt(); ++s) {
    MorleyLocal g = morley_local(mesh.vertices[mesh.tri[s][0]], mesh.vertices[mesh.tri[s][1]],
                                 mesh.vertices[mesh.tri[s][2]], {1, 1, 1});
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) H += coeffs(s, i) * g.hess[i];
    hess[s] = H;
  }
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    int e = dm.et.tri_edges[t][k];
    int other = dm.et.edge_tris[e][0] == t ? dm.et.edge_tris[e][1] : dm.et.edge_tris[e][0];
    Eigen::Matrix2d J;
    if (other >= 0)
      J = hess[t] - hess[other];
    else if (include_boundary)
      J = hess[t];
    else
      continue;
    Eigen::Vector2d a = mesh.vertices[dm.et.edge_verts[e][0]];
    Eigen::Vector2d b = mesh.vertices[dm.et.edge_verts[e][1]];
    double len = (b - a).norm();
    Eigen::Vector2d tau = (b - a) / len;
    double integral = 0.0;
    for (size_t q = 0; q < er.w.size(); ++q) integral += er.w[q] * (J * tau).squaredNorm();
    sum += len * integral;
  }
  return sum;
}

}  // namespace

TEST_CASE("estimator vanishes for the zero function") {
  Triangulation2D mesh = build_domain("lshape");
  mesh = refine_uniform(mesh);
  MorleyDofMap dm = morley_dofs(mesh);
  EstimatorField eta = estimator(mesh, dm, 100.0, Eigen::VectorXd::Zero(dm.ndof));
  CHECK(eta.eta_sq.maxCoeff() == 0.0);
  CHECK(eta.total == 0.0);
}

TEST_CASE("global quadratic: interior jumps vanish, boundary carries the trace") {
  Triangulation2D mesh = build_domain("unit_square");
  for (int i = 0; i < 3; ++i) mesh = refine_uniform(mesh);
  MorleyDofMap dm = morley_dofs(mesh);
  // f = x^2 + 3xy - 2y^2: constant Hessian [[2,3],[3,-4]]
  auto f = [](const Eigen::Vector2d& p) {
    return p.x() * p.x() + 3.0 * p.x() * p.y() - 2.0 * p.y() * p.y();
  };
  auto grad = [](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(2.0 * p.x() + 3.0 * p.y(), 3.0 * p.x() - 4.0 * p.y());
  };
  MorleyInterpolant ip = interpolate_morley(mesh, dm.et, f, grad);
  Eigen::MatrixXd coeffs = interpolant_coeffs(mesh, dm, ip);
  Eigen::Matrix2d H;
  H << 2.0, 3.0, 3.0, -4.0;

  EstimatorOptions no_bnd;
  no_bnd.include_boundary = false;
  const double lambda_h = 7.0;
  EstimatorField interior_only = estimator_local(mesh, dm.et, lambda_h, coeffs, no_bnd);
  const TriRule& rule = tri_rule_d6();
  for (int t = 0; t < mesh.nt(); ++t) {
    // volume term only: |T|^2 lambda^2 int f^2
    double area = tri_area(mesh, t);
    double integral = 0.0;
    for (size_t q = 0; q < rule.w.size(); ++q) {
      Eigen::Vector2d p = rule.bary[q][0] * mesh.vertices[mesh.tri[t][0]] +
                          rule.bary[q][1] * mesh.vertices[mesh.tri[t][1]] +
                          rule.bary[q][2] * mesh.vertices[mesh.tri[t][2]];
      integral += rule.w[q] * f(p) * f(p);
    }
    integral *= area;
    double expected = area * area * lambda_h * lambda_h * integral;
    CHECK(std::abs(interior_only.eta_sq(t) - expected) < 1e-10 * (1.0 + expected));
  }

  EstimatorField with_bnd = estimator_local(mesh, dm.et, lambda_h, coeffs);
  for (int t = 0; t < mesh.nt(); ++t) {
    double bnd = 0.0;
    for (int k = 0; k < 3; ++k) {
      int e = dm.et.tri_edges[t][k];
      if (dm.et.edge_tris[e][0] >= 0 && dm.et.edge_tris[e][1] >= 0) continue;
      Eigen::Vector2d a = mesh.vertices[dm.et.edge_verts[e][0]];
      Eigen::Vector2d b = mesh.vertices[dm.et.edge_verts[e][1]];
      double len = (b - a).norm();
      Eigen::Vector2d tau = (b - a) / len;
      bnd += len * (H * tau).squaredNorm();
    }
    double expected = interior_only.eta_sq(t) + std::sqrt(tri_area(mesh, t)) * bnd;
    CHECK(std::abs(with_bnd.eta_sq(t) - expected) < 1e-10 * (1.0 + expected));
  }
}

TEST_CASE("jump term equals brute-force edge quadrature on random coefficients") {
  Triangulation2D mesh = build_domain("lshape");
  mesh = refine_uniform(mesh);
  mesh = refine(mesh, {0, 3, 5});
  MorleyDofMap dm = morley_dofs(mesh);
  std::mt19937 rng(99u);
  Eigen::MatrixXd coeffs(mesh.nt(), 6);
  for (int t = 0; t < mesh.nt(); ++t)
    for (int i = 0; i < 6; ++i)
      coeffs(t, i) = static_cast<double>(rng()) / 4294967296.0 - 0.5;
  for (bool bnd : {true, false}) {
    EstimatorOptions opts;
    opts.include_boundary = bnd;
    EstimatorField eta = estimator_local(mesh, dm.et, 0.0, coeffs, opts);  // jump term only
    for (int t = 0; t < mesh.nt(); ++t) {
      double expected = std::sqrt(tri_area(mesh, t)) * jump_term_oracle(mesh, dm, coeffs, t, bnd);
      CHECK(std::abs(eta.eta_sq(t) - expected) < 1e-12 * (1.0 + expected));
    }
  }
}

TEST_CASE("estimator parallel equals serial bitwise") {
  Triangulation2D mesh = build_domain("dumbbell_slit");
  MorleyDofMap dm = morley_dofs(mesh);
  std::mt19937 rng(4u);
  Eigen::VectorXd x(dm.ndof);
  for (int i = 0; i < dm.ndof; ++i) x(i) = static_cast<double>(rng()) / 4294967296.0 - 0.5;
  EstimatorOptions par, ser;
  ser.parallel = false;
  EstimatorField a = estimator(mesh, dm, 33.0, x, par);
  EstimatorField b = estimator(mesh, dm, 33.0, x, ser);
  CHECK((a.eta_sq - b.eta_sq).norm() == 0.0);
  CHECK(a.total == b.total);
}

TEST_CASE("Doerfler marking examples and minimality") {
  EstimatorField eta;
  eta.eta_sq.resize(4);
  eta.eta_sq << 4.0, 3.0, 2.0, 1.0;
  eta.total = 10.0;
  CHECK(mark_doerfler(eta, 0.5) == std::vector<int>{0, 1});
  CHECK(mark_doerfler(eta, 1.0) == std::vector<int>{0, 1, 2, 3});

  EstimatorField with_zero;
  with_zero.eta_sq.resize(3);
  with_zero.eta_sq << 5.0, 0.0, 3.0;
  with_zero.total = 8.0;
  CHECK(mark_doerfler(with_zero, 1.0) == std::vector<int>{0, 2});  // positives only

  EstimatorField dominant;
  dominant.eta_sq.resize(5);
  dominant.eta_sq << 0.1, 0.1, 9.0, 0.1, 0.1;
  dominant.total = dominant.eta_sq.sum();
  CHECK(mark_doerfler(dominant, 0.5) == std::vector<int>{2});

  EstimatorField ties;
  ties.eta_sq.resize(4);
  ties.eta_sq << 2.0, 2.0, 2.0, 2.0;
  ties.total = 8.0;
  CHECK(mark_doerfler(ties, 0.5) == std::vector<int>{0, 1});  // ties by id

  // randomized minimality: dropping the smallest marked element breaks theta
  std::mt19937 rng(2024u);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + static_cast<int>(rng() % 40);
    EstimatorField field;
    field.eta_sq.resize(n);
    for (int i = 0; i < n; ++i)
      field.eta_sq(i) = static_cast<double>(rng() % 1000) / 100.0;
    field.total = field.eta_sq.sum();
    double theta = 0.05 + 0.9 * (static_cast<double>(rng()) / 4294967296.0);
    std::vector<int> marked = mark_doerfler(field, theta);
    double acc = 0.0;
    for (int id : marked) acc += field.eta_sq(id);
    if (field.total > 0.0) {
      CHECK(acc >= theta * field.total * (1.0 - 1e-12));
      if (!marked.empty()) {
        double smallest = field.eta_sq(marked[0]);
        for (int id : marked) smallest = std::min(smallest, field.eta_sq(id));
        CHECK(acc - smallest < theta * field.total);
      }
    }
  }
}

TEST_CASE("adaptive loop on the L-shape: chains, bound, budget") {
  AfemOptions opts;
  opts.k = 1;
  opts.theta = 0.5;
  opts.max_dofs = 2500;
  AfemResult res = afem_loop(build_domain("lshape"), opts);
  REQUIRE(res.rows.size() >= 4);
  const double lambda1 = 418.97504246688220;
  for (size_t i = 0; i < res.rows.size(); ++i) {
    const HistoryRow& r = res.rows[i];
    CHECK(r.level == static_cast<int>(i));
    CHECK(r.glb <= r.lambda_h * (1.0 + 1e-9));
    CHECK(r.lambda_h <= r.lambda_M * (1.0 + 1e-9));
    CHECK(r.eta2 > 0.0);
    if (r.condition_ok) CHECK(r.lambda_h <= lambda1);
    if (i > 0) CHECK(r.nT > res.rows[i - 1].nT);
  }
  // the budget terminates the loop
  CHECK(morley_dofs(res.final_mesh).ndof >= opts.max_dofs);
  // the eigenvalue approaches the reference from below
  CHECK(res.rows.back().lambda_h > 350.0);
  CHECK(res.rows.back().lambda_h < lambda1);
}

TEST_CASE("uniform path: GLB nondecreasing on the paper domains") {
  for (const char* dom : {"dumbbell_slit", "lshape", "four_slit"}) {
    AfemOptions opts;
    opts.k = 1;
    opts.theta = 1.0;
    opts.max_dofs = 1500;
    AfemResult res = afem_loop(build_domain(dom), opts);
    REQUIRE(res.rows.size() >= 2);
    for (size_t i = 1; i < res.rows.size(); ++i)
      CHECK(res.rows[i].glb >= res.rows[i - 1].glb - 1e-10);
    // uniform marking doubles the triangle count each level
    for (size_t i = 1; i < res.rows.size(); ++i)
      CHECK(res.rows[i].nT == 2 * res.rows[i - 1].nT);
  }
}

TEST_CASE("history CSV format and determinism") {
  AfemOptions opts;
  opts.k = 1;
  opts.theta = 0.5;
  opts.max_dofs = 400;
  AfemResult a = afem_loop(build_domain("lshape"), opts);
  AfemResult b = afem_loop(build_domain("lshape"), opts);
  std::ostringstream sa, sb;
  write_history_csv(sa, a.rows);
  write_history_csv(sb, b.rows);
  CHECK(sa.str() == sb.str());
  std::istringstream in(sa.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "level,nT,hmax,lambdaM,lambdaH,glb,eta2,cond");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == static_cast<int>(a.rows.size()));
}

TEST_CASE("empirical rate recovers a synthetic slope") {
  std::vector<double> n, err;
  for (int i = 1; i <= 6; ++i) {
    double ni = 100.0 * std::pow(2.0, i);
    n.push_back(ni);
    err.push_back(5.0 * std::pow(ni, -0.75));
  }
  CHECK(empirical_rate(n, err, 3) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(empirical_rate(n, err, 6) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS(empirical_rate(n, err, 7));
}
