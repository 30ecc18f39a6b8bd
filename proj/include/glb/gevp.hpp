#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "glb/mesh.hpp"
#include "glb/morley.hpp"

namespace glb {

using SpMat = Eigen::SparseMatrix<double>;

// Extra-stabilised block pencil on P2(T) x M(T). Unknown order: the 6*nt
// piecewise P2 Lagrange dofs (triangle-major), then the interior Morley dofs.
// A is symmetric positive definite, B is positive semidefinite with kernel
// {0} x M(T); the finite eigenvalues of A x = lambda B x are the stabilised
// eigenvalues lambda_h.
struct BlockPencil {
  SpMat A, B;
  int n_pw = 0, n_morley = 0;
};

BlockPencil assemble_block_pencil(const Triangulation2D& mesh, const MorleyDofMap& dm);

// Plain Morley pencil: stiffness K and mass M on the interior dofs.
struct MorleyPencil {
  SpMat K, M;
};

MorleyPencil assemble_morley_pencil(const Triangulation2D& mesh, const MorleyDofMap& dm,
                                    bool parallel = true);

// Morley mass with per-triangle weight 1/(1 - lambda kappa2^2 h_T^4).
// Requires lambda inside the window (all weights positive).
SpMat assemble_weighted_morley_mass(const Triangulation2D& mesh, const MorleyDofMap& dm,
                                    double lambda, bool parallel = true);

struct EigResult {
  Eigen::VectorXd lambda;   // ascending
  Eigen::MatrixXd vectors;  // B-normalised columns
};

// k smallest finite eigenvalues of A x = lambda B x with A spd, B psd.
// Solved as the largest eigenvalues of the inverted pencil B x = mu A x.
EigResult dense_gevp_smallest(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k);

// Factored pencil: one LDLT of the spd matrix A reused across many mass
// matrices, as in the reduced rational fixed point.
class PencilFactor {
 public:
  explicit PencilFactor(const SpMat& A);

  // k smallest pencil eigenvalues by subspace iteration on the inverted
  // pencil, optionally warm-started column by column.
  EigResult smallest(const SpMat& B, int k, int extra, int maxit, double tol,
                     const Eigen::MatrixXd* warm = nullptr) const;

 private:
  SpMat A_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

EigResult sparse_gevp_smallest(const SpMat& A, const SpMat& B, int k, int extra = 8,
                               int maxit = 400, double tol = 1e-11);

// Route by size: dense at or below the threshold, else subspace iteration.
EigResult gevp_smallest(const SpMat& A, const SpMat& B, int k, int dense_threshold = 3000);

// || A x - lambda B x ||_2 / (||A x||_2 + lambda ||B x||_2)
double pencil_residual(const SpMat& A, const SpMat& B, double lambda,
                       const Eigen::VectorXd& x);

// Cluster detection: consecutive eigenvalues with relative gap <= reltol
// belong to one cluster. Returns [first, last] index pairs.
std::vector<std::pair<int, int>> cluster_eigenvalues(const Eigen::VectorXd& lambda,
                                                     double reltol = 1e-8);

struct GlbMode {
  double lambda_M = 0.0;   // plain Morley eigenvalue
  double lambda_h = 0.0;   // stabilised eigenvalue (reduced solve, block fallback)
  double glb = 0.0;        // post-processed bound, zero when the condition fails
  bool condition_ok = false;
  int fp_iterations = 0;
};

struct GlbOptions {
  int k = 1;
  // The fixed point re-solves the pencil many times per mesh, so the driver
  // switches to the factored sparse path much earlier than the generic facade.
  int dense_threshold = 500;
  double fp_tol = 1e-13;
  int fp_maxit = 60;
  double cluster_tol = 1e-8;
  bool parallel = true;
};

struct GlbResult {
  std::vector<GlbMode> modes;
  Eigen::MatrixXd morley_vectors;  // interior Morley coefficients per mode,
                                   // scaled so the lifted u_pw has unit L2 norm
  double hmax = 0.0;
  int ndof = 0;
};

// Full pipeline: Morley eigenvalues, reduced rational fixed point per mode,
// condition check and post-processed bound.
GlbResult solve_glb(const Triangulation2D& mesh, const MorleyDofMap& dm,
                    const GlbOptions& opts);

// Stabilised eigenvalues straight from the block pencil (independent route).
EigResult solve_block(const Triangulation2D& mesh, const MorleyDofMap& dm, int k,
                      int dense_threshold = 3000);

}  // namespace glb
