#include "volball/qc.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace volball {

namespace {

Mat3 edge_matrix(std::span<const Vec3> x, const Tet& t) {
  Mat3 e;
  e.col(0) = x[t[1]] - x[t[0]];
  e.col(1) = x[t[2]] - x[t[0]];
  e.col(2) = x[t[3]] - x[t[0]];
  return e;
}

Frame decompose(const Mat3& J, int tet_index, bool tolerate_degenerate) {
  Eigen::JacobiSVD<Mat3> svd(J, Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const double det = J.determinant();
  if (!tolerate_degenerate && !(std::abs(det) > 1e-14 * s[0] * s[0] * s[0]))
    throw DegenerateTetError("singular Jacobian" + (tet_index >= 0 ? " on tet " + std::to_string(tet_index) : ""),
                             tet_index);
  Frame f;
  f.W = svd.matrixV();
  for (int k = 0; k < 2; ++k) {
    const auto col = f.W.col(k);
    int i = 0;
    while (i < 2 && std::abs(col[i]) <= 1e-12) ++i;
    if (col[i] < 0) f.W.col(k) = -f.W.col(k);
  }
  f.W.col(2) = f.W.col(0).cross(f.W.col(1));
  f.lambda = Vec3(s[0], s[1], det > 0 ? s[2] : -s[2]);
  return f;
}

}  // namespace

std::vector<Mat3> jacobian_per_tet(const TetMesh& mesh, std::span<const Vec3> positions) {
  std::vector<Mat3> out(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets()[t];
    out[t] = edge_matrix(positions, tet) * edge_matrix(mesh.vertices(), tet).inverse();
  }
  return out;
}

Frame frame_decompose(const Mat3& J, int tet_index) { return decompose(J, tet_index, false); }

TetFrameField frames_of(const TetMesh& mesh, std::span<const Vec3> positions, bool tolerate_degenerate) {
  const auto jac = jacobian_per_tet(mesh, positions);
  TetFrameField field;
  field.frames.resize(jac.size());
  for (size_t t = 0; t < jac.size(); ++t) field.frames[t] = decompose(jac[t], static_cast<int>(t), tolerate_degenerate);
  return field;
}

std::vector<double> qc_coefficients(const TetFrameField& field) {
  std::vector<double> k(field.frames.size());
  for (size_t t = 0; t < k.size(); ++t) k[t] = qc_coefficient(field.frames[t].lambda);
  return k;
}

Vec3 flip_eigenvalues(const Vec3& lambda) {
  return lambda[2] < 0 ? Vec3(lambda[0], lambda[1], -lambda[2]) : lambda;
}

Vec3 residual_step(const Vec3& lambda, double C) {
  const double k = qc_coefficient(lambda);
  if (!(k > 0)) throw std::invalid_argument("residual_step needs a positive K (flip first)");
  if (!(C > 0)) throw std::invalid_argument("residual_step needs C > 0");
  const double r = lambda[0] - lambda[1];
  const double l = lambda[1] - lambda[2];
  const double theta = (k - 1.0) / ((k - 1.0) + C);
  return {lambda[0] - theta * r, lambda[1], lambda[2] + theta * l};
}

Vec3 truncate_eigenvalues(const Vec3& lambda, double K_T) {
  const double a = lambda[0], c = lambda[2];
  if (a <= K_T * c) return lambda;
  const double e = 0.5 * (a + c);
  const double l = (K_T - 1.0) * e / ((K_T + 1.0) * (a - e));
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = l * (lambda[i] - e) + e;
  return out;
}

Mat3 coefficient_matrix(const Frame& frame) {
  const double a = frame.lambda[0], b = frame.lambda[1], c = frame.lambda[2];
  const Vec3 d(b * c / a, a * c / b, a * b / c);
  return frame.W * d.asDiagonal() * frame.W.transpose();
}

Points reconstruct_map_3dqcs(const TetMesh& mesh, const TetFrameField& field, const DirichletConstraints& constraints) {
  const auto& x = mesh.vertices();
  std::vector<Triplet> trips;
  trips.reserve(16 * static_cast<size_t>(mesh.num_tets()));
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets()[t];
    const auto g = barycentric_gradients(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]);
    const double vol = signed_volume(mesh, t);
    Mat3 a = coefficient_matrix(field.frames[t]);
    a = 0.5 * (a + a.transpose());
    for (int i = 0; i < 4; ++i) {
      const Vec3 ag = a * g[i];
      for (int j = 0; j < 4; ++j) trips.emplace_back(tet[i], tet[j], vol * g[j].dot(ag));
    }
  }
  // Exact symmetry: average each entry with its transpose.
  const size_t m = trips.size();
  for (size_t i = 0; i < m; ++i) {
    trips[i] = Triplet(trips[i].row(), trips[i].col(), 0.5 * trips[i].value());
    trips.emplace_back(trips[i].col(), trips[i].row(), trips[i].value());
  }
  const LinearSystem sys(mesh.num_vertices(), std::move(trips));
  const Eigen::MatrixXd sol = solve_columns(sys, Eigen::MatrixXd::Zero(mesh.num_vertices(), 3), constraints);
  Points out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) out[v] = sol.row(v).transpose();
  return out;
}

}  // namespace volball
