#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "glb/gevp.hpp"
#include "glb/mesh.hpp"

namespace glb {

// kappa_1 in dimension n with the same Bessel-root replacement for n = 2
// as the Morley constants.
double kappa1_for_cr(int n);

// Crouzeix-Raviart dofs with homogeneous Dirichlet conditions: one midpoint
// value per interior edge.
struct CRDofMap {
  EdgeTable et;
  std::vector<int> edge_dof;  // -1 on the boundary
  int ndof = 0;
};

CRDofMap cr_dofs(const Triangulation2D& mesh);

// Plain CR Laplace pencil: stiffness K and (diagonal) mass M on the interior
// edge dofs.
struct CRPencil {
  SpMat K, M;
};

CRPencil assemble_cr_pencil(const Triangulation2D& mesh, const CRDofMap& dm,
                            bool parallel = true);

// CR mass with per-triangle weight 1/(1 - lambda kappa1^2 h_T^2).
// Requires lambda inside the window (all weights positive).
SpMat assemble_weighted_cr_mass(const Triangulation2D& mesh, const CRDofMap& dm,
                                double lambda, bool parallel = true);

// Extra-stabilised block pencil on P1(T) x CR(T). Unknown order: the 3*nt
// piecewise P1 Lagrange dofs (triangle-major), then the interior CR dofs.
// A is symmetric positive definite, B is positive semidefinite with kernel
// {0} x CR(T).
struct CRBlockPencil {
  SpMat A, B;
  int n_pw = 0, n_cr = 0;
};

CRBlockPencil assemble_cr_stabilised(const Triangulation2D& mesh, const CRDofMap& dm,
                                     double kappa = kappa1_for_cr(2));

// Post-processed bound lambda_CR / (1 + kappa1^2 lambda_CR hmax^2); maps 0 to 0.
double cr_glb_value(double lambda_cr, double hmax);

struct CrMode {
  double lambda_CR = 0.0;  // plain CR eigenvalue
  double lambda_h = 0.0;   // stabilised eigenvalue (reduced solve, block fallback)
  double glb = 0.0;        // post-processed bound, zero when the condition fails
  bool condition_ok = false;
  int fp_iterations = 0;
};

struct CrResult {
  std::vector<CrMode> modes;
  double hmax = 0.0;
  int ndof = 0;
};

// Same pipeline as solve_glb with the gradient in place of the Hessian:
// CR eigenvalues, reduced rational fixed point per mode, condition check
// and post-processed bound.
CrResult solve_cr_glb(const Triangulation2D& mesh, const CRDofMap& dm,
                      const GlbOptions& opts);

}  // namespace glb
