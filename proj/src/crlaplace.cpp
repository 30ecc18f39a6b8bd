#include "glb/crlaplace.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "glb/morley.hpp"

#ifdef GLB_HAVE_OPENMP
#include <omp.h>
#endif

namespace glb {

double kappa1_for_cr(int n) { return kappa1(n); }

CRDofMap cr_dofs(const Triangulation2D& mesh) {
  CRDofMap dm;
  dm.et = build_edges(mesh);
  dm.edge_dof.assign(dm.et.ne(), -1);
  for (int e = 0; e < dm.et.ne(); ++e)
    if (!dm.et.edge_on_boundary[e]) dm.edge_dof[e] = dm.ndof++;
  return dm;
}

double cr_glb_value(double lambda_cr, double hmax) {
  const double k1 = kappa1_for_cr(2);
  return lambda_cr / (1.0 + k1 * k1 * lambda_cr * hmax * hmax);
}

namespace {

// Local CR element. The CR basis function for the edge opposite vertex k is
// psi_k = 1 - 2 lambda_k, so the local CR mass is diagonal and the exact
// closed forms below replace quadrature.
struct CRLocal {
  std::array<int, 3> dof;   // interior CR dof of the edge opposite vertex k
  Eigen::Matrix3d stiff;    // 4 |T| grad lambda_i . grad lambda_j
  Eigen::Matrix3d mass_cr;  // |T|/3 delta_ij
  Eigen::Matrix3d mass_p1;  // |T|/12 (1 + delta_ij)
  Eigen::Matrix3d cross;    // int lambda_i psi_j = |T| (1 - delta_ij)/6
  double hT = 0.0;
};

CRLocal cr_local(const Triangulation2D& mesh, const CRDofMap& dm, int t) {
  CRLocal w;
  const auto& tv = mesh.tri[t];
  const Eigen::Vector2d z0 = mesh.vertices[tv[0]], z1 = mesh.vertices[tv[1]],
                        z2 = mesh.vertices[tv[2]];
  const double area = tri_area(mesh, t);
  std::array<Eigen::Vector2d, 3> e = {z2 - z1, z0 - z2, z1 - z0};
  std::array<Eigen::Vector2d, 3> grad_lambda;
  for (int k = 0; k < 3; ++k)
    grad_lambda[k] = Eigen::Vector2d(-e[k].y(), e[k].x()) / (2.0 * area);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = i == j ? 1.0 : 0.0;
      w.stiff(i, j) = 4.0 * area * grad_lambda[i].dot(grad_lambda[j]);
      w.mass_cr(i, j) = area / 3.0 * d;
      w.mass_p1(i, j) = area / 12.0 * (1.0 + d);
      w.cross(i, j) = area / 6.0 * (1.0 - d);
    }
  for (int k = 0; k < 3; ++k) w.dof[k] = dm.edge_dof[dm.et.tri_edges[t][k]];
  w.hT = tri_diameter(mesh, t);
  return w;
}

using Trip = Eigen::Triplet<double>;

void append_cr_block(const CRLocal& w, const Eigen::Matrix3d& loc, std::vector<Trip>& out) {
  for (int i = 0; i < 3; ++i) {
    if (w.dof[i] < 0) continue;
    for (int j = 0; j < 3; ++j) {
      if (w.dof[j] < 0) continue;
      out.emplace_back(w.dof[i], w.dof[j], loc(i, j));
    }
  }
}

}  // namespace

CRPencil assemble_cr_pencil(const Triangulation2D& mesh, const CRDofMap& dm, bool parallel) {
  const int nt = mesh.nt();
  std::vector<std::vector<Trip>> tk(nt), tm(nt);
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    CRLocal w = cr_local(mesh, dm, t);
    append_cr_block(w, w.stiff, tk[t]);
    append_cr_block(w, w.mass_cr, tm[t]);
  }
  std::vector<Trip> k_all, m_all;
  for (int t = 0; t < nt; ++t) {
    k_all.insert(k_all.end(), tk[t].begin(), tk[t].end());
    m_all.insert(m_all.end(), tm[t].begin(), tm[t].end());
  }
  CRPencil p;
  p.K.resize(dm.ndof, dm.ndof);
  p.M.resize(dm.ndof, dm.ndof);
  p.K.setFromTriplets(k_all.begin(), k_all.end());
  p.M.setFromTriplets(m_all.begin(), m_all.end());
  return p;
}

SpMat assemble_weighted_cr_mass(const Triangulation2D& mesh, const CRDofMap& dm, double lambda,
                                bool parallel) {
  const double k1 = kappa1_for_cr(2);
  const int nt = mesh.nt();
  std::vector<std::vector<Trip>> per_tri(nt);
  bool bad = false;
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    CRLocal w = cr_local(mesh, dm, t);
    double denom = 1.0 - lambda * k1 * k1 * w.hT * w.hT;
    if (denom <= 0.0) {
      bad = true;
      continue;
    }
    append_cr_block(w, (w.mass_cr / denom).eval(), per_tri[t]);
  }
  if (bad) throw std::runtime_error("weighted mass: lambda outside window");
  std::vector<Trip> trips;
  for (int t = 0; t < nt; ++t) trips.insert(trips.end(), per_tri[t].begin(), per_tri[t].end());
  SpMat B(dm.ndof, dm.ndof);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

CRBlockPencil assemble_cr_stabilised(const Triangulation2D& mesh, const CRDofMap& dm,
                                     double kappa) {
  CRBlockPencil bp;
  bp.n_pw = 3 * mesh.nt();
  bp.n_cr = dm.ndof;
  const int n = bp.n_pw + bp.n_cr;
  std::vector<Trip> ta, tb;
  for (int t = 0; t < mesh.nt(); ++t) {
    CRLocal w = cr_local(mesh, dm, t);
    double s = 1.0 / (kappa * kappa * w.hT * w.hT);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        ta.emplace_back(3 * t + i, 3 * t + j, s * w.mass_p1(i, j));
        tb.emplace_back(3 * t + i, 3 * t + j, w.mass_p1(i, j));
      }
    for (int i = 0; i < 3; ++i) {
      if (w.dof[i] < 0) continue;
      int gi = bp.n_pw + w.dof[i];
      for (int j = 0; j < 3; ++j) {
        double v = -s * w.cross(j, i);  // pw j vs cr i
        ta.emplace_back(gi, 3 * t + j, v);
        ta.emplace_back(3 * t + j, gi, v);
      }
    }
    Eigen::Matrix3d cc = w.stiff + s * w.mass_cr;
    for (int i = 0; i < 3; ++i) {
      if (w.dof[i] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (w.dof[j] < 0) continue;
        ta.emplace_back(bp.n_pw + w.dof[i], bp.n_pw + w.dof[j], cc(i, j));
      }
    }
  }
  bp.A.resize(n, n);
  bp.B.resize(n, n);
  bp.A.setFromTriplets(ta.begin(), ta.end());
  bp.B.setFromTriplets(tb.begin(), tb.end());
  return bp;
}

CrResult solve_cr_glb(const Triangulation2D& mesh, const CRDofMap& dm, const GlbOptions& opts) {
  const double k1 = kappa1_for_cr(2);
  CrResult res;
  res.hmax = hmax(mesh);
  res.ndof = dm.ndof;
  const double cap = k1 * k1 * res.hmax * res.hmax;  // condition: lambda * cap <= 1
  if (opts.k > dm.ndof) throw std::runtime_error("more modes requested than dofs");

  CRPencil cp = assemble_cr_pencil(mesh, dm, opts.parallel);
  std::unique_ptr<PencilFactor> factor;
  const bool sparse = dm.ndof > opts.dense_threshold;
  if (sparse) factor = std::make_unique<PencilFactor>(cp.K);
  Eigen::MatrixXd dense_k;
  if (!sparse) dense_k = Eigen::MatrixXd(cp.K);
  auto smallest = [&](const SpMat& B, int k, const Eigen::MatrixXd* warm) {
    if (sparse) return factor->smallest(B, k, 8, 400, 1e-11, warm);
    return dense_gevp_smallest(dense_k, Eigen::MatrixXd(B), k);
  };

  EigResult cr = smallest(cp.M, opts.k, nullptr);

  std::unique_ptr<CRBlockPencil> block;
  std::unique_ptr<EigResult> block_eig;
  for (int i = 0; i < opts.k; ++i) {
    CrMode mode;
    mode.lambda_CR = cr.lambda(i);
    // start inside the window: x/(1+x cap) < 1/cap for every x > 0, and on a
    // uniform mesh this is already the fixed point
    double lam = mode.lambda_CR / (1.0 + mode.lambda_CR * cap);
    bool window_ok = lam * cap < 0.999;
    if (window_ok) {
      // Steffensen iteration as in solve_glb: theta' < 0, so the Aitken update
      // is a Newton step on theta(lambda) - lambda
      Eigen::MatrixXd warm = cr.vectors.leftCols(i + 1);
      double prev_diff = std::numeric_limits<double>::max();
      double base = lam, theta0 = 0.0;
      bool have_theta0 = false;
      bool converged = false;
      for (int it = 0; it < opts.fp_maxit; ++it) {
        double at = have_theta0 ? theta0 : base;
        SpMat Bw = assemble_weighted_cr_mass(mesh, dm, at, opts.parallel);
        EigResult e = smallest(Bw, i + 1, &warm);
        double next = e.lambda(i);
        ++mode.fp_iterations;
        if (next * cap >= 0.999) {
          window_ok = false;  // iterate left the window
          break;
        }
        double diff = std::abs(next - at);
        lam = next;
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
    } else {
      // coarse-mesh fallback: block pencil eigenvalue
      if (!block) {
        block = std::make_unique<CRBlockPencil>(assemble_cr_stabilised(mesh, dm));
        block_eig = std::make_unique<EigResult>(
            gevp_smallest(block->A, block->B, opts.k, opts.dense_threshold));
      }
      mode.lambda_h = block_eig->lambda(i);
    }
    mode.condition_ok = mode.lambda_h * cap <= 1.0 + 1e-12;
    mode.glb = mode.condition_ok ? cr_glb_value(mode.lambda_CR, res.hmax) : 0.0;
    res.modes.push_back(mode);
  }
  return res;
}

}  // namespace glb
