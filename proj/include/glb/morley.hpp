#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

#include "glb/mesh.hpp"

namespace glb {

// First positive root of the Bessel function J_1.
double bessel_j11();

// Interpolation constants kappa_1, kappa_2 in dimension n >= 2.
double kappa1(int n);
double kappa2(int n);

// Local Morley element on a triangle. Basis order: vertex functions 0..2,
// then edge functions 3..5 for the edge opposite vertex k with the global
// normal orientation encoded in sigma[k] (+1 if the global edge normal is
// the outward normal of this triangle).
struct MorleyLocal {
  std::array<Eigen::Vector2d, 3> z;
  std::array<Eigen::Vector2d, 3> grad_lambda;
  std::array<double, 3> sigma;
  double area = 0.0;

  std::array<Eigen::Matrix2d, 6> hess;     // constant Hessians of the 6 basis fns
  Eigen::Matrix<double, 6, 6> stiffness;   // area * (D2 phi_i : D2 phi_j)
  Eigen::Matrix<double, 6, 6> mass;        // \int phi_i phi_j
  Eigen::Matrix<double, 6, 6> mass_cross;  // \int phi_i L_j   (L: P2 Lagrange)
  Eigen::Matrix<double, 6, 6> mass_p2;     // \int L_i L_j

  Eigen::Vector3d barycentric(const Eigen::Vector2d& x) const;
  double eval(int i, const Eigen::Vector2d& x) const;
  Eigen::Vector2d eval_grad(int i, const Eigen::Vector2d& x) const;
};

MorleyLocal morley_local(const Eigen::Vector2d& z0, const Eigen::Vector2d& z1,
                         const Eigen::Vector2d& z2, const std::array<double, 3>& sigma);

// P2 Lagrange basis on a triangle (vertices then midpoints opposite vertex k),
// used for the piecewise-quadratic component.
double p2_eval(const Eigen::Vector3d& lambda, int i);
Eigen::Vector2d p2_eval_grad(const std::array<Eigen::Vector2d, 3>& grad_lambda,
                             const Eigen::Vector3d& lambda, int i);

// Global Morley degrees of freedom with homogeneous clamped conditions:
// interior vertex values first, then interior edge mean normal derivatives.
struct MorleyDofMap {
  EdgeTable et;
  std::vector<int> vertex_dof;  // -1 on the boundary
  std::vector<int> edge_dof;    // -1 on the boundary
  int n_vertex_dofs = 0;
  int ndof = 0;
  // per triangle: sign of the global edge normal vs this triangle's outward
  std::vector<std::array<double, 3>> sigma;
};

MorleyDofMap morley_dofs(const Triangulation2D& mesh);

// Global edge normal: rotate the lo->hi tangent by -90 degrees.
Eigen::Vector2d global_edge_normal(const Triangulation2D& mesh, int lo, int hi);

// Morley interpolation dofs of a smooth function (includes boundary dofs).
struct MorleyInterpolant {
  Eigen::VectorXd vertex_vals;
  Eigen::VectorXd edge_means;  // mean of grad f . nu over each edge, global normal
};

MorleyInterpolant interpolate_morley(
    const Triangulation2D& mesh, const EdgeTable& et,
    const std::function<double(const Eigen::Vector2d&)>& f,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& grad_f);

}  // namespace glb
