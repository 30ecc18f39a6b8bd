#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <vector>

// Desk-scale Worsey-Farin C1 macro-element kit on a single tetrahedron (or a
// pair of neighbours): the 12-sub-tet split, cubic Bernstein ordinates, the
// 28-dof C1 interpolation, C1 interface residuals, basis scaling reports, and
// the companion correction functions (edge bump, face normal corrector,
// volume bubble, weighted Riesz representation).

namespace glb::wf3d {

// Multi-index tables. Cubic ordinates on a tetrahedron use the 20 exponents
// |alpha| = 3 over 4 barycentric components, quadratics the 10 with
// |alpha| = 2, face cubics the 10 with |alpha| = 3 over 3 components. All
// tables are in lexicographic order with the first component decreasing, and
// a Bernstein form with ordinates c reads f = k! sum_a c(a) lambda^a / a!.
extern const std::array<std::array<int, 4>, 20> kCubic;
extern const std::array<std::array<int, 4>, 10> kQuad;
extern const std::array<std::array<int, 3>, 10> kFaceCubic;

int cubic_index(const std::array<int, 4>& a);
int quad_index(const std::array<int, 4>& a);
int face_cubic_index(const std::array<int, 3>& a);

using Ordinates = std::array<double, 20>;
using FaceOrdinates = std::array<double, 10>;

// Edges in lexicographic vertex order; edge e joins q[kEdge[e][0]], q[kEdge[e][1]].
extern const std::array<std::array<int, 2>, 6> kEdge;

// Orthonormal edge frame: tau from the lower to the higher vertex, nu1 the
// normalised rejection of the global axis least aligned with tau, nu2 = tau x nu1.
struct EdgeFrame {
  Eigen::Vector3d tau, nu1, nu2;
};

struct Tet {
  std::array<Eigen::Vector3d, 4> q;

  double volume() const;  // positive for valid input (checked by users below)
  double diameter() const;
  Eigen::Vector3d centroid() const;
  Eigen::Vector3d face_centroid(int m) const;  // face opposite q[m]
  double face_area(int m) const;
  Eigen::Vector3d face_normal(int m) const;  // outward unit normal
  Eigen::Vector3d edge_midpoint(int e) const;
  EdgeFrame edge_frame(int e) const;
  Eigen::Vector4d barycentric(const Eigen::Vector3d& x) const;
  std::array<Eigen::Vector3d, 4> grad_lambda() const;
};

// Insphere centre: face-area weighted average of the vertices.
Eigen::Vector3d incircle_center(const Tet& t);

// The 12-sub-tet Worsey-Farin split. Sub-tet 2p+t for edge pair p (kEdge
// order) and the t-th remaining vertex m (ascending) is ordered
// (c_K, c_m, Q_j, Q_k) with j < k.
struct WFPartition {
  Tet macro;
  Eigen::Vector3d ck;                   // interior centre (insphere midpoint)
  std::array<Eigen::Vector3d, 4> cf;    // face centres
  std::array<Tet, 12> sub;
  std::array<std::array<int, 3>, 12> label;  // (m, j, k) per sub-tet
  double eps_center = 0.0;  // dist(c_K, boundary) / diameter
  double eps_face = 0.0;    // min over faces of dist(c_m, face boundary) / face diameter
};

// Face centres default to the centroid; a supplied neighbour centre moves
// c_m to the intersection of segment c_K--neighbour with the face. Throws if
// that segment misses the open face.
WFPartition wf_partition(
    const Tet& t,
    const std::array<std::optional<Eigen::Vector3d>, 4>& neighbor_center = {});

// The 28 degrees of freedom: values at the four vertices, then the gradient
// components grouped by axis (d/dx_l at Q_1..Q_4 for l = 0,1,2), then the two
// frame-normal derivatives at each edge midpoint in kEdge order.
using Dof28 = std::array<double, 28>;

int vertex_value_dof(int mu);
int vertex_gradient_dof(int mu, int axis);
int edge_normal_dof(int e, int m);  // m = 0 for nu1, 1 for nu2

Dof28 sample_dofs(const Tet& t, const std::function<double(const Eigen::Vector3d&)>& f,
                  const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& grad_f);

using WFOrdinates = std::array<Ordinates, 12>;

// C1 interpolation: edgewise cubic Hermite preprocessing, a quadratic radial
// layer anchored at c_K, and a 2D Hsieh-Clough-Tocher patch per face.
WFOrdinates ct3d_interpolate(const WFPartition& p, const Dof28& dofs);

// Applies the 28 dof functionals to a piecewise cubic given by ordinates.
Dof28 evaluate_dofs(const WFPartition& p, const WFOrdinates& c);

struct Eval {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
};

Eval eval_bernstein(const Ordinates& c, const Tet& t, const Eigen::Vector3d& x);
Eigen::Matrix3d eval_bernstein_hessian(const Ordinates& c, const Tet& t,
                                       const Eigen::Vector3d& x);

// Evaluates the piecewise cubic at x in the sub-tet containing it.
Eval eval_wf(const WFPartition& p, const WFOrdinates& c, const Eigen::Vector3d& x);

// 2D Hsieh-Clough-Tocher interpolation on a (3D-embedded) triangle split at
// an interior centre. The 12 dofs are values and gradients at the vertices
// plus the in-plane normal derivative at the three outer edge midpoints;
// edge i is opposite vertex i and its in-plane normal points away from it.
struct HctDofs {
  std::array<double, 3> value{};
  std::array<Eigen::Vector3d, 3> grad{};
  std::array<double, 3> dn{};
};

// Sub-triangle i covers (centre, V_j, V_k) with {j, k} = {0,1,2} \ {i}, j < k.
using HctOrdinates = std::array<FaceOrdinates, 3>;

HctOrdinates hct2d_interpolate(const std::array<Eigen::Vector3d, 3>& v,
                               const Eigen::Vector3d& center, const HctDofs& dofs);

// In-plane unit normal of edge i (opposite vertex i), pointing away from it.
Eigen::Vector3d hct_edge_normal(const std::array<Eigen::Vector3d, 3>& v, int i);

struct FaceEval {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();  // in-plane gradient
};

FaceEval eval_face_cubic(const FaceOrdinates& c, const std::array<Eigen::Vector3d, 3>& v,
                         const Eigen::Vector3d& x);

// C1 interface residuals for two sub-tets listing the shared face as their
// first three vertices in the same order: con1 is the maximal mismatch of the
// face ordinates, con2 the maximal mismatch of the normal-derivative ordinate
// sums. Both vanish iff the piecewise cubic is C1 across the face.
struct C1Residual {
  double con1 = 0.0;
  double con2 = 0.0;
};

C1Residual check_c1(const Tet& t1, const Ordinates& c1, const Tet& t2, const Ordinates& c2);

// Reindexes ordinates under a vertex permutation: vertex p of the permuted
// tet is vertex perm[p] of the original.
Ordinates permute_ordinates(const Ordinates& c, const std::array<int, 4>& perm);
Tet permute_tet(const Tet& t, const std::array<int, 4>& perm);

// The 18 interior faces of the partition with alignment permutations.
struct InternalFace {
  int left = 0, right = 0;
  std::array<int, 4> perm_left{}, perm_right{};
};

std::vector<InternalFace> internal_faces(const WFPartition& p);

C1Residual max_c1_residual(const WFPartition& p, const WFOrdinates& c);

// Norms of the 28 nodal basis functions on similarity copies of one shape,
// with least-squares exponents of ||phi|| ~ h^e per Sobolev level.
struct ScalingReport {
  std::array<double, 4> h{};
  // norm[dof][s][level] for s = 0 (L2), 1 (H1 semi), 2 (H2 semi)
  std::array<std::array<std::array<double, 4>, 3>, 28> norm{};
  std::array<std::array<double, 3>, 28> exponent{};
  std::array<double, 4> eps_center{};
};

ScalingReport basis_scaling_report(const Tet& shape,
                                   const std::array<double, 4>& h = {1.0, 0.5, 0.25, 0.125});

// Radial C1 edge bump with unit line average over the edge. The radius is
// half the smaller of |E|/2 and the distance from mid(E) to the boundary of
// the union of the supplied edge-patch tetrahedra.
struct XiBall {
  Eigen::Vector3d mid;
  double radius = 0.0;
  double length = 0.0;  // |E|
};

XiBall make_xi_ball(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const std::vector<Tet>& patch);
double eval_xi(const XiBall& b, const Eigen::Vector3d& x);
double xi_l2_norm(const XiBall& b);  // |E| sqrt(38 pi R / 315)

// Face normal corrector on the two-tet patch of a shared face, normalised so
// the average normal derivative over the shared face is one (orientation nu,
// the outward normal of `plus`) and zero over every other patch face.
struct FacePatch {
  Tet plus, minus;
  int face_plus = -1, face_minus = -1;  // local face index in either tet
  Eigen::Vector3d nu;
};

FacePatch make_face_patch(const Tet& plus, const Tet& minus);
double eval_zeta(const FacePatch& fp, const Eigen::Vector3d& x);
Eigen::Vector3d eval_zeta_grad(const FacePatch& fp, const Eigen::Vector3d& x);
// L2 norm of the one-sided corrector over its tet: 6 dist(z4, F) sqrt(|T| / 12155).
double zeta_l2_norm(const Tet& t, int face);

// Squared volume bubble 4^8 prod_k lambda_k^2 with unit maximum at the centroid.
double eval_bubble(const Tet& t, const Eigen::Vector3d& x);
Eigen::Vector3d eval_bubble_grad(const Tet& t, const Eigen::Vector3d& x);

// Riesz representation v in P2(T) of w -> int_T g w dx with respect to the
// bubble-weighted product (b_T v, w). Coefficients in the monomial basis
// lambda^beta over kQuad.
Eigen::VectorXd riesz_vt(const Tet& t, const std::function<double(const Eigen::Vector3d&)>& g);
double eval_p2(const Eigen::VectorXd& coef, const Tet& t, const Eigen::Vector3d& x);

}  // namespace glb::wf3d
