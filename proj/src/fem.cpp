#include "volball/fem.hpp"

#include <algorithm>
#include <cmath>

namespace volball {

namespace {

constexpr int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

// k_ij = -|V| <grad l_i, grad l_j> / 2, equal to l_opp * cot(theta_opp) / 12.
template <class F>
void for_each_tet_weight(const TetMesh& mesh, std::span<const Vec3> x, F&& emit) {
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets()[t];
    const auto g = barycentric_gradients(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]);
    const double vol = std::abs(signed_volume(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]));
    for (const auto& e : kEdgePairs) emit(tet[e[0]], tet[e[1]], -0.5 * vol * g[e[0]].dot(g[e[1]]));
  }
}

std::vector<double> tet_weights(const TetMesh& mesh, std::span<const Vec3> x) {
  std::vector<double> w(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) w[t] = std::abs(signed_volume(mesh, x, t));
  return w;
}

}  // namespace

std::vector<double> tet_cotangent_weights(const TetMesh& mesh, std::span<const Vec3> positions) {
  const auto& edges = mesh.edges();
  std::vector<double> w(edges.size(), 0.0);
  for_each_tet_weight(mesh, positions, [&](int a, int b, double k) {
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    const auto it = std::lower_bound(edges.begin(), edges.end(), key);
    w[it - edges.begin()] += k;
  });
  return w;
}

LinearSystem laplacian(const TetMesh& mesh, std::span<const Vec3> positions) {
  std::vector<Triplet> trips;
  trips.reserve(24 * static_cast<size_t>(mesh.num_tets()));
  for_each_tet_weight(mesh, positions, [&](int a, int b, double k) {
    trips.emplace_back(a, b, -k);
    trips.emplace_back(b, a, -k);
    trips.emplace_back(a, a, k);
    trips.emplace_back(b, b, k);
  });
  return LinearSystem(mesh.num_vertices(), std::move(trips));
}

std::vector<double> lumped_volumes(const TetMesh& mesh, std::span<const Vec3> positions) {
  std::vector<double> a(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double q = 0.25 * std::abs(signed_volume(mesh, positions, t));
    for (int v : mesh.tets()[t]) a[v] += q;
  }
  return a;
}

std::vector<Vec3> tet_gradients(const TetMesh& mesh, std::span<const Vec3> positions, std::span<const double> field) {
  std::vector<Vec3> out(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets()[t];
    const auto g = barycentric_gradients(positions[tet[0]], positions[tet[1]], positions[tet[2]], positions[tet[3]]);
    Vec3 s = Vec3::Zero();
    for (int i = 0; i < 4; ++i) s += field[tet[i]] * g[i];
    out[t] = s;
  }
  return out;
}

std::vector<double> tet_to_vertex(const TetMesh& mesh, std::span<const Vec3> positions,
                                  std::span<const double> tet_values) {
  const auto w = tet_weights(mesh, positions);
  std::vector<double> num(mesh.num_vertices(), 0.0), den(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tets()[t]) {
      num[v] += w[t] * tet_values[t];
      den[v] += w[t];
    }
  for (int v = 0; v < mesh.num_vertices(); ++v) num[v] /= den[v];
  return num;
}

std::vector<Vec3> tet_to_vertex(const TetMesh& mesh, std::span<const Vec3> positions, std::span<const Vec3> tet_values) {
  const auto w = tet_weights(mesh, positions);
  std::vector<Vec3> num(mesh.num_vertices(), Vec3::Zero());
  std::vector<double> den(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tets()[t]) {
      num[v] += w[t] * tet_values[t];
      den[v] += w[t];
    }
  for (int v = 0; v < mesh.num_vertices(); ++v) num[v] /= den[v];
  return num;
}

SpMat tet_to_vertex_matrix(const TetMesh& mesh, std::span<const Vec3> positions) {
  const auto w = tet_weights(mesh, positions);
  std::vector<double> den(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tets()[t]) den[v] += w[t];
  std::vector<Triplet> trips;
  trips.reserve(4 * static_cast<size_t>(mesh.num_tets()));
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tets()[t]) trips.emplace_back(v, t, w[t] / den[v]);
  SpMat m(mesh.num_vertices(), mesh.num_tets());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

DirichletConstraints boundary_constraints(const TetMesh& mesh, std::span<const Vec3> positions) {
  const auto& bv = mesh.boundary_vertices();
  DirichletConstraints c{bv, Eigen::MatrixXd(bv.size(), 3)};
  for (size_t i = 0; i < bv.size(); ++i) c.values.row(i) = positions[bv[i]].transpose();
  return c;
}

}  // namespace volball
