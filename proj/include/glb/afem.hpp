#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "glb/gevp.hpp"
#include "glb/mesh.hpp"
#include "glb/morley.hpp"

namespace glb {

struct EstimatorField {
  Eigen::VectorXd eta_sq;  // per triangle, nonnegative
  double total = 0.0;      // exact sum of eta_sq
};

struct EstimatorOptions {
  // boundary edges enter with the full Hessian trace as the jump; switch off
  // to drop them for sensitivity checks
  bool include_boundary = true;
  bool parallel = true;
};

// eta^2(T) = |T|^2 ||lambda_h u_M||^2_{L2(T)}
//          + |T|^{1/2} sum_F |F| |[D^2 u_M]_F tau_F|^2
// from the interior Morley coefficient vector x (boundary dofs zero).
EstimatorField estimator(const Triangulation2D& mesh, const MorleyDofMap& dm, double lambda_h,
                         const Eigen::VectorXd& x, const EstimatorOptions& opts = {});

// Same estimator from explicit per-triangle local coefficients (row t holds
// the six local Morley coefficients of triangle t in the outward-normal
// basis, i.e. edge coefficients are sigma * global edge mean); lets tests
// feed full interpolants including boundary values.
EstimatorField estimator_local(const Triangulation2D& mesh, const EdgeTable& et,
                               double lambda_h, const Eigen::MatrixXd& coeffs,
                               const EstimatorOptions& opts = {});

// Minimal-cardinality Doerfler set: greedy by descending eta_sq, ties by id,
// until the marked sum reaches theta * total.
std::vector<int> mark_doerfler(const EstimatorField& eta, double theta);

struct HistoryRow {
  int level = 0;
  int nT = 0;
  double hmax = 0.0;
  double lambda_M = 0.0;
  double lambda_h = 0.0;
  double glb = 0.0;
  double eta2 = 0.0;  // estimator total
  bool condition_ok = false;
};

struct AfemOptions {
  int k = 1;
  double theta = 0.5;     // theta >= 1 selects full (uniform) marking
  int max_dofs = 200000;  // stop once the Morley dof count reaches this
  EstimatorOptions est;
  GlbOptions glb;
};

struct AfemResult {
  std::vector<HistoryRow> rows;
  Triangulation2D final_mesh;
};

// solve -> estimate -> record -> mark -> refine until the dof budget.
AfemResult afem_loop(Triangulation2D mesh, const AfemOptions& opts);

// CSV history: header level,nT,hmax,lambdaM,lambdaH,glb,eta2,cond
void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows);

// Least-squares slope of log(err) against log(n) over the last m samples,
// returned with the sign convention err ~ n^{-rate}.
double empirical_rate(const std::vector<double>& n, const std::vector<double>& err, int last_m);

}  // namespace glb
