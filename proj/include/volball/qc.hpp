#pragma once

#include <span>

#include "volball/mesh.hpp"
#include "volball/sparse.hpp"

namespace volball {

/// Dilation frame of a Jacobian: J'J = W diag(a^2, b^2, c^2) W', a >= b >= |c|,
/// with c carrying the sign of det J.
struct Frame {
  Mat3 W = Mat3::Identity();
  Vec3 lambda = Vec3::Ones();
};

struct TetFrameField {
  std::vector<Frame> frames;
};

/// J with J * E_rest = E_def for each tet (E = edge matrix [x1-x0, x2-x0, x3-x0]).
std::vector<Mat3> jacobian_per_tet(const TetMesh& mesh, std::span<const Vec3> positions);

/// Signed singular-value frame of J. Throws DegenerateTetError (with `tet_index`)
/// when |det J| <= 1e-14 * |J|^3.
Frame frame_decompose(const Mat3& J, int tet_index = -1);

/// Frames of the map rest -> positions. With `tolerate_degenerate` set, singular
/// Jacobians yield frames with c = 0 instead of throwing.
TetFrameField frames_of(const TetMesh& mesh, std::span<const Vec3> positions, bool tolerate_degenerate = false);

/// K = a / c (negative on inverted tets).
inline double qc_coefficient(const Vec3& lambda) { return lambda[0] / lambda[2]; }

std::vector<double> qc_coefficients(const TetFrameField& field);

/// (a, b, -c) when K < 0, identity otherwise.
Vec3 flip_eigenvalues(const Vec3& lambda);

/// Residual update (a - theta R, b, c + theta L) with R = a - b, L = b - c and
/// theta = (K - 1) / ((K - 1) + C). Requires K > 0 and C > 0.
Vec3 residual_step(const Vec3& lambda, double C);

/// Affine eigenvalue truncation capping a / c at K_T. Requires positive eigenvalues and K_T > 1.
Vec3 truncate_eigenvalues(const Vec3& lambda, double K_T);

/// W diag(bc/a, ac/b, ab/c) W'.
Mat3 coefficient_matrix(const Frame& frame);

/// Solve div(A grad u) = 0 for the three coordinate functions on the rest mesh,
/// with per-tet A = coefficient_matrix(frame). Constrained rows take their fixed values.
Points reconstruct_map_3dqcs(const TetMesh& mesh, const TetFrameField& field, const DirichletConstraints& constraints);

}  // namespace volball
