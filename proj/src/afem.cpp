#include "glb/afem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace glb {

namespace {

struct TriHess {
  Eigen::Matrix2d H;
  double area = 0.0;
  double vol_term = 0.0;  // |T|^2 lambda_h^2 int_T u_M^2
};

std::vector<TriHess> per_triangle_data(const Triangulation2D& mesh, const EdgeTable& et,
                                       double lambda_h, const Eigen::MatrixXd& coeffs,
                                       bool parallel) {
  const int nt = mesh.nt();
  std::vector<TriHess> out(nt);
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    MorleyLocal g = morley_local(mesh.vertices[mesh.tri[t][0]], mesh.vertices[mesh.tri[t][1]],
                                 mesh.vertices[mesh.tri[t][2]], {1, 1, 1});
    // the sign pattern scales edge functions by sigma_k; fold it into coeffs
    // by using the tabulated sigma of this triangle
    (void)et;
    Eigen::Matrix<double, 6, 1> c = coeffs.row(t).transpose();
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) H += c(i) * g.hess[i];
    out[t].H = H;
    out[t].area = g.area;
    out[t].vol_term = g.area * g.area * lambda_h * lambda_h * c.dot(g.mass * c);
  }
  return out;
}

}  // namespace

EstimatorField estimator_local(const Triangulation2D& mesh, const EdgeTable& et,
                               double lambda_h, const Eigen::MatrixXd& coeffs,
                               const EstimatorOptions& opts) {
  const int nt = mesh.nt();
  if (coeffs.rows() != nt || coeffs.cols() != 6)
    throw std::invalid_argument("estimator: coefficient matrix must be nt x 6");
  std::vector<TriHess> data = per_triangle_data(mesh, et, lambda_h, coeffs, opts.parallel);
  EstimatorField field;
  field.eta_sq.resize(nt);
#ifdef GLB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (opts.parallel)
#endif
  for (int t = 0; t < nt; ++t) {
    double jump_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      int e = et.tri_edges[t][k];
      int other = et.edge_tris[e][0] == t ? et.edge_tris[e][1] : et.edge_tris[e][0];
      Eigen::Matrix2d J;
      if (other >= 0) {
        J = data[t].H - data[other].H;
      } else {
        if (!opts.include_boundary) continue;
        J = data[t].H;  // full trace on the boundary
      }
      Eigen::Vector2d a = mesh.vertices[et.edge_verts[e][0]];
      Eigen::Vector2d b = mesh.vertices[et.edge_verts[e][1]];
      double len = (b - a).norm();
      Eigen::Vector2d tau = (b - a) / len;
      jump_sum += len * (J * tau).squaredNorm();
    }
    field.eta_sq(t) = data[t].vol_term + std::sqrt(data[t].area) * jump_sum;
  }
  field.total = field.eta_sq.sum();
  return field;
}

EstimatorField estimator(const Triangulation2D& mesh, const MorleyDofMap& dm, double lambda_h,
                         const Eigen::VectorXd& x, const EstimatorOptions& opts) {
  if (x.size() != dm.ndof) throw std::invalid_argument("estimator: dof vector size mismatch");
  const int nt = mesh.nt();
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(nt, 6);
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      int vd = dm.vertex_dof[mesh.tri[t][k]];
      int ed = dm.edge_dof[dm.et.tri_edges[t][k]];
      if (vd >= 0) coeffs(t, k) = x(vd);
      // estimator_local evaluates with sigma = +1, so apply this triangle's
      // sign to the edge coefficient
      if (ed >= 0) coeffs(t, 3 + k) = dm.sigma[t][k] * x(ed);
    }
  }
  return estimator_local(mesh, dm.et, lambda_h, coeffs, opts);
}

std::vector<int> mark_doerfler(const EstimatorField& eta, double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw std::invalid_argument("theta must be in (0,1]");
  const int nt = static_cast<int>(eta.eta_sq.size());
  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (eta.eta_sq(a) != eta.eta_sq(b)) return eta.eta_sq(a) > eta.eta_sq(b);
    return a < b;
  });
  // accumulate the target in the same (descending) order, so theta = 1
  // terminates exactly after the last positive contribution
  double sorted_total = 0.0;
  for (int id : order) sorted_total += eta.eta_sq(id);
  const double target = theta * sorted_total;
  std::vector<int> marked;
  double acc = 0.0;
  for (int id : order) {
    if (eta.eta_sq(id) <= 0.0) break;  // only positive contributions help
    marked.push_back(id);
    acc += eta.eta_sq(id);
    if (acc >= target) break;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

AfemResult afem_loop(Triangulation2D mesh, const AfemOptions& opts) {
  AfemResult res;
  // ensure the coarsest solve is well posed
  MorleyDofMap dm = morley_dofs(mesh);
  while (dm.ndof < std::max(opts.k, 1)) {
    mesh = refine_uniform(mesh);
    dm = morley_dofs(mesh);
  }
  GlbOptions gopts = opts.glb;
  gopts.k = opts.k;
  for (int level = 0;; ++level) {
    GlbResult sol = solve_glb(mesh, dm, gopts);
    const GlbMode& mode = sol.modes[opts.k - 1];
    EstimatorField eta = estimator(mesh, dm, mode.lambda_h,
                                   sol.morley_vectors.col(opts.k - 1), opts.est);
    HistoryRow row;
    row.level = level;
    row.nT = mesh.nt();
    row.hmax = sol.hmax;
    row.lambda_M = mode.lambda_M;
    row.lambda_h = mode.lambda_h;
    row.glb = mode.glb;
    row.eta2 = eta.total;
    row.condition_ok = mode.condition_ok;
    res.rows.push_back(row);
    if (dm.ndof >= opts.max_dofs) break;

    std::vector<int> marked;
    if (opts.theta >= 1.0) {
      marked.resize(mesh.nt());
      std::iota(marked.begin(), marked.end(), 0);  // full marking: uniform
    } else {
      marked = mark_doerfler(eta, opts.theta);
      if (marked.empty()) break;  // zero eigenfunction: nothing to drive refinement
    }
    mesh = refine(mesh, marked);
    dm = morley_dofs(mesh);
  }
  res.final_mesh = std::move(mesh);
  return res;
}

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows) {
  os << "level,nT,hmax,lambdaM,lambdaH,glb,eta2,cond\n";
  os.precision(17);
  for (const HistoryRow& r : rows) {
    os << r.level << ',' << r.nT << ',' << r.hmax << ',' << r.lambda_M << ',' << r.lambda_h
       << ',' << r.glb << ',' << r.eta2 << ',' << (r.condition_ok ? 1 : 0) << '\n';
  }
}

double empirical_rate(const std::vector<double>& n, const std::vector<double>& err,
                      int last_m) {
  if (n.size() != err.size() || static_cast<int>(n.size()) < last_m || last_m < 2)
    throw std::invalid_argument("empirical_rate: need at least last_m matching samples");
  const int start = static_cast<int>(n.size()) - last_m;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = start; i < static_cast<int>(n.size()); ++i) {
    double lx = std::log(n[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(last_m);
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return -slope;
}

}  // namespace glb
