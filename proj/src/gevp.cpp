#include "glb/gevp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#ifdef GLB_HAVE_OPENMP
#include <omp.h>
#endif

namespace glb {

namespace {

struct LocalWork {
  MorleyLocal g;
  std::array<int, 6> dof;  // interior morley dof or -1
  double hT = 0.0;
};

LocalWork local_work(const Triangulation2D& mesh, const MorleyDofMap& dm, int t) {
  LocalWork w;
  w.g = morley_local(mesh.vertices[mesh.tri[t][0]], mesh.vertices[mesh.tri[t][1]],
                     mesh.vertices[mesh.tri[t][2]], dm.sigma[t]);
  for (int k = 0; k < 3; ++k) {
    w.dof[k] = dm.vertex_dof[mesh.tri[t][k]];
    w.dof[3 + k] = dm.edge_dof[dm.et.tri_edges[t][k]];
  }
  w.hT = tri_diameter(mesh, t);
  return w;
}

using Trip = Eigen::Triplet<double>;

void append_morley_block(const LocalWork& w, const Eigen::Matrix<double, 6, 6>& loc,
                         std::vector<Trip>& out) {
  for (int i = 0; i < 6; ++i) {
    if (w.dof[i] < 0) continue;
    for (int j = 0; j < 6; ++j) {
      if (w.dof[j] < 0) continue;
      out.emplace_back(w.dof[i], w.dof[j], loc(i, j));
    }
  }
}

}  // namespace

MorleyPencil assemble_morley_pencil(const Triangulation2D& mesh, const MorleyDofMap& dm,
                                    bool parallel) {
  const int nt = mesh.nt();
  std::vector<std::vector<Trip>> tk(nt), tm(nt);
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    LocalWork w = local_work(mesh, dm, t);
    append_morley_block(w, w.g.stiffness, tk[t]);
    append_morley_block(w, w.g.mass, tm[t]);
  }
  std::vector<Trip> k_all, m_all;
  for (int t = 0; t < nt; ++t) {
    k_all.insert(k_all.end(), tk[t].begin(), tk[t].end());
    m_all.insert(m_all.end(), tm[t].begin(), tm[t].end());
  }
  MorleyPencil p;
  p.K.resize(dm.ndof, dm.ndof);
  p.M.resize(dm.ndof, dm.ndof);
  p.K.setFromTriplets(k_all.begin(), k_all.end());
  p.M.setFromTriplets(m_all.begin(), m_all.end());
  return p;
}

SpMat assemble_weighted_morley_mass(const Triangulation2D& mesh, const MorleyDofMap& dm,
                                    double lambda, bool parallel) {
  const double k2 = kappa2(2);
  const int nt = mesh.nt();
  std::vector<std::vector<Trip>> per_tri(nt);
  bool bad = false;
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    LocalWork w = local_work(mesh, dm, t);
    double denom = 1.0 - lambda * k2 * k2 * std::pow(w.hT, 4);
    if (denom <= 0.0) {
      bad = true;
      continue;
    }
    append_morley_block(w, (w.g.mass / denom).eval(), per_tri[t]);
  }
  if (bad) throw std::runtime_error("weighted mass: lambda outside window");
  std::vector<Trip> trips;
  for (int t = 0; t < nt; ++t) trips.insert(trips.end(), per_tri[t].begin(), per_tri[t].end());
  SpMat B(dm.ndof, dm.ndof);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

BlockPencil assemble_block_pencil(const Triangulation2D& mesh, const MorleyDofMap& dm) {
  const double k2 = kappa2(2);
  BlockPencil bp;
  bp.n_pw = 6 * mesh.nt();
  bp.n_morley = dm.ndof;
  const int n = bp.n_pw + bp.n_morley;
  std::vector<Trip> ta, tb;
  for (int t = 0; t < mesh.nt(); ++t) {
    LocalWork w = local_work(mesh, dm, t);
    double s = 1.0 / (k2 * k2 * std::pow(w.hT, 4));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        ta.emplace_back(6 * t + i, 6 * t + j, s * w.g.mass_p2(i, j));
        tb.emplace_back(6 * t + i, 6 * t + j, w.g.mass_p2(i, j));
      }
    for (int i = 0; i < 6; ++i) {
      if (w.dof[i] < 0) continue;
      int gi = bp.n_pw + w.dof[i];
      for (int j = 0; j < 6; ++j) {
        double v = -s * w.g.mass_cross(i, j);  // morley i vs pw j
        ta.emplace_back(gi, 6 * t + j, v);
        ta.emplace_back(6 * t + j, gi, v);
      }
    }
    Eigen::Matrix<double, 6, 6> mm = w.g.stiffness + s * w.g.mass;
    for (int i = 0; i < 6; ++i) {
      if (w.dof[i] < 0) continue;
      for (int j = 0; j < 6; ++j) {
        if (w.dof[j] < 0) continue;
        ta.emplace_back(bp.n_pw + w.dof[i], bp.n_pw + w.dof[j], mm(i, j));
      }
    }
  }
  bp.A.resize(n, n);
  bp.B.resize(n, n);
  bp.A.setFromTriplets(ta.begin(), ta.end());
  bp.B.setFromTriplets(tb.begin(), tb.end());
  return bp;
}

double pencil_residual(const SpMat& A, const SpMat& B, double lambda,
                       const Eigen::VectorXd& x) {
  Eigen::VectorXd ax = A * x, bx = B * x;
  return (ax - lambda * bx).norm() / (ax.norm() + lambda * bx.norm());
}

EigResult dense_gevp_smallest(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k) {
  // invert the pencil: B x = mu A x with A spd; lambda = 1/mu, largest mu first
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, A);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense gevp failed");
  const int n = static_cast<int>(A.rows());
  EigResult r;
  r.lambda.resize(k);
  r.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    double mu = es.eigenvalues()(n - 1 - i);
    if (mu <= 0.0) throw std::runtime_error("dense gevp: fewer positive modes than requested");
    Eigen::VectorXd x = es.eigenvectors().col(n - 1 - i);
    r.lambda(i) = 1.0 / mu;
    r.vectors.col(i) = x / std::sqrt(mu);  // x^T B x = mu for A-normalised x
  }
  return r;
}

namespace {

Eigen::MatrixXd deterministic_init(int n, int p) {
  std::mt19937 rng(20240811u);
  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)
      X(i, j) = static_cast<double>(rng()) / 4294967296.0 - 0.5;
  return X;
}

}  // namespace

PencilFactor::PencilFactor(const SpMat& A) : A_(A) {
  ldlt_.compute(A_);
  if (ldlt_.info() != Eigen::Success) throw std::runtime_error("LDLT factorisation failed");
}

EigResult PencilFactor::smallest(const SpMat& B, int k, int extra, int maxit, double tol,
                                 const Eigen::MatrixXd* warm) const {
  const int n = static_cast<int>(A_.rows());
  const int p = std::min(n, k + std::max(extra, k / 2));
  // round-off keeps the residual above eps * cond on strongly graded meshes,
  // so a stalled iterate below this floor is accepted as converged
  const double floor_tol = std::max(100.0 * tol, 1e-9);
  Eigen::MatrixXd X = deterministic_init(n, p);
  if (warm && warm->rows() == n) {
    int c = std::min<int>(p, static_cast<int>(warm->cols()));
    X.leftCols(c) = warm->leftCols(c);
  }
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(p);
  std::vector<double> hist;
  for (int it = 0; it < maxit; ++it) {
    Eigen::MatrixXd Y = ldlt_.solve((B * X).eval());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    Eigen::MatrixXd AQ = A_ * Q, BQ = B * Q;
    Eigen::MatrixXd Ar = Q.transpose() * AQ, Br = Q.transpose() * BQ;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Br, Ar);
    if (es.info() != Eigen::Success) throw std::runtime_error("ritz step failed");
    // descending mu
    X.resize(n, p);
    for (int j = 0; j < p; ++j) {
      X.col(j) = Q * es.eigenvectors().col(p - 1 - j);
      lam(j) = es.eigenvalues()(p - 1 - j);
    }
    bool pos_ok = true;
    double rmax = 0.0;
    for (int j = 0; j < k; ++j) {
      double mu = lam(j);
      if (mu <= 0.0) {
        pos_ok = false;
        continue;
      }
      double l = 1.0 / mu;
      Eigen::VectorXd ax = A_ * X.col(j), bx = B * X.col(j);
      double r = (ax - l * bx).norm() / (ax.norm() + l * bx.norm());
      rmax = std::max(rmax, r);
    }
    if (pos_ok && rmax <= tol) break;
    hist.push_back(rmax);
    bool stalled = hist.size() > 8 && rmax > 0.5 * hist[hist.size() - 9];
    if (pos_ok && stalled && rmax <= floor_tol) break;
    if (it == maxit - 1) {
      if (pos_ok && rmax <= floor_tol) break;
      throw std::runtime_error("subspace iteration did not converge");
    }
  }
  EigResult r;
  r.lambda.resize(k);
  r.vectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    double mu = lam(j);
    if (mu <= 0.0) throw std::runtime_error("sparse gevp: fewer positive modes than requested");
    r.lambda(j) = 1.0 / mu;
    Eigen::VectorXd x = X.col(j);
    double bnorm = std::sqrt(x.dot(B * x));
    r.vectors.col(j) = x / bnorm;
  }
  // ascending lambda = descending mu already; ensure sorted
  for (int j = 1; j < k; ++j)
    if (r.lambda(j) < r.lambda(j - 1) - 1e-9 * r.lambda(j))
      throw std::runtime_error("sparse gevp: unsorted spectrum");
  return r;
}

EigResult sparse_gevp_smallest(const SpMat& A, const SpMat& B, int k, int extra, int maxit,
                               double tol) {
  return PencilFactor(A).smallest(B, k, extra, maxit, tol);
}

EigResult gevp_smallest(const SpMat& A, const SpMat& B, int k, int dense_threshold) {
  if (A.rows() <= dense_threshold)
    return dense_gevp_smallest(Eigen::MatrixXd(A), Eigen::MatrixXd(B), k);
  return sparse_gevp_smallest(A, B, k);
}

std::vector<std::pair<int, int>> cluster_eigenvalues(const Eigen::VectorXd& lambda,
                                                     double reltol) {
  std::vector<std::pair<int, int>> out;
  int n = static_cast<int>(lambda.size());
  int first = 0;
  for (int i = 1; i <= n; ++i) {
    bool close = i < n && std::abs(lambda(i) - lambda(i - 1)) <=
                              reltol * std::max(std::abs(lambda(i)), std::abs(lambda(i - 1)));
    if (!close) {
      out.emplace_back(first, i - 1);
      first = i;
    }
  }
  return out;
}

namespace {

// L2 norm of the lifted piecewise quadratic u_pw = u_M / (1 - lambda k2^2 hT^4)
double lifted_l2_norm(const Triangulation2D& mesh, const MorleyDofMap& dm,
                      const Eigen::VectorXd& x, double lambda) {
  const double k2 = kappa2(2);
  double nsq = 0.0;
  for (int t = 0; t < mesh.nt(); ++t) {
    LocalWork w = local_work(mesh, dm, t);
    Eigen::Matrix<double, 6, 1> c = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i = 0; i < 6; ++i)
      if (w.dof[i] >= 0) c(i) = x(w.dof[i]);
    double denom = 1.0 - lambda * k2 * k2 * std::pow(w.hT, 4);
    nsq += c.dot(w.g.mass * c) / (denom * denom);
  }
  return std::sqrt(nsq);
}

}  // namespace

GlbResult solve_glb(const Triangulation2D& mesh, const MorleyDofMap& dm,
                    const GlbOptions& opts) {
  const double k2 = kappa2(2);
  GlbResult res;
  res.hmax = hmax(mesh);
  res.ndof = dm.ndof;
  const double cap = k2 * k2 * std::pow(res.hmax, 4);  // condition: lambda * cap <= 1
  if (opts.k > dm.ndof) throw std::runtime_error("more modes requested than dofs");

  MorleyPencil mp = assemble_morley_pencil(mesh, dm, opts.parallel);
  std::unique_ptr<PencilFactor> factor;
  const bool sparse = dm.ndof > opts.dense_threshold;
  if (sparse) factor = std::make_unique<PencilFactor>(mp.K);
  Eigen::MatrixXd dense_k;
  if (!sparse) dense_k = Eigen::MatrixXd(mp.K);
  auto smallest = [&](const SpMat& B, int k, const Eigen::MatrixXd* warm) {
    if (sparse) return factor->smallest(B, k, 8, 400, 1e-11, warm);
    return dense_gevp_smallest(dense_k, Eigen::MatrixXd(B), k);
  };

  EigResult morley = smallest(mp.M, opts.k, nullptr);

  res.morley_vectors.resize(dm.ndof, opts.k);
  std::unique_ptr<BlockPencil> block;
  std::unique_ptr<EigResult> block_eig;
  for (int i = 0; i < opts.k; ++i) {
    GlbMode mode;
    mode.lambda_M = morley.lambda(i);
    // start inside the window: x/(1+x cap) < 1/cap for every x > 0, and on a
    // uniform mesh this is already the fixed point
    double lam = mode.lambda_M / (1.0 + mode.lambda_M * cap);
    bool window_ok = lam * cap < 0.999;
    Eigen::VectorXd vec;
    if (window_ok) {
      // Steffensen iteration on lambda -> theta_i(lambda): the map is smooth and
      // decreasing, so the Aitken update is a Newton step on theta(lambda) - lambda
      // and converges in a few evaluations even when the plain iteration is a
      // near-unit contraction (kappa2^2 hmax^4 lambda close to one)
      Eigen::MatrixXd warm = morley.vectors.leftCols(i + 1);
      double prev_diff = std::numeric_limits<double>::max();
      double base = lam, theta0 = 0.0;
      bool have_theta0 = false;
      bool converged = false;
      for (int it = 0; it < opts.fp_maxit; ++it) {
        double at = have_theta0 ? theta0 : base;
        SpMat Bw = assemble_weighted_morley_mass(mesh, dm, at, opts.parallel);
        EigResult e = smallest(Bw, i + 1, &warm);
        double next = e.lambda(i);
        ++mode.fp_iterations;
        if (next * cap >= 0.999) {
          window_ok = false;  // iterate left the window
          break;
        }
        double diff = std::abs(next - at);
        lam = next;
        vec = e.vectors.col(i);
        warm = e.vectors;
        // converged, or stalled at the solver noise floor
        if (diff <= opts.fp_tol * next || (diff <= 1e-11 * next && diff >= prev_diff)) {
          converged = true;
          break;
        }
        prev_diff = diff;
        if (!have_theta0) {
          theta0 = next;
          have_theta0 = true;
        } else {
          double denom = next - 2.0 * theta0 + base;
          double acc = denom != 0.0 ? base - (theta0 - base) * (theta0 - base) / denom : next;
          if (!(acc > 0.0) || acc * cap >= 0.999) acc = next;  // keep the window
          base = acc;
          lam = acc;
          have_theta0 = false;
        }
      }
      if (!converged) window_ok = false;
    }
    if (window_ok) {
      mode.lambda_h = lam;
      double nrm = lifted_l2_norm(mesh, dm, vec, lam);
      res.morley_vectors.col(i) = vec / nrm;
    } else {
      // coarse-mesh fallback: block pencil eigenvalue
      if (!block) {
        block = std::make_unique<BlockPencil>(assemble_block_pencil(mesh, dm));
        block_eig = std::make_unique<EigResult>(
            gevp_smallest(block->A, block->B, opts.k, opts.dense_threshold));
      }
      mode.lambda_h = block_eig->lambda(i);
      Eigen::VectorXd full = block_eig->vectors.col(i);  // b-normalised: ||u_pw|| = 1
      res.morley_vectors.col(i) = full.segment(block->n_pw, dm.ndof);
    }
    mode.condition_ok = mode.lambda_h * cap <= 1.0 + 1e-12;
    mode.glb =
        mode.condition_ok ? mode.lambda_M / (1.0 + mode.lambda_M * cap) : 0.0;
    res.modes.push_back(mode);
  }
  return res;
}

EigResult solve_block(const Triangulation2D& mesh, const MorleyDofMap& dm, int k,
                      int dense_threshold) {
  BlockPencil bp = assemble_block_pencil(mesh, dm);
  return gevp_smallest(bp.A, bp.B, k, dense_threshold);
}

}  // namespace glb
