#include "volball/dem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "volball/fem.hpp"

namespace volball {

DiffusionOperators build_operators(const TetMesh& mesh, std::span<const Vec3> positions) {
  const double tol = 1e-14 * std::pow(mesh.bbox_diagonal(), 3);
  for (int t = 0; t < mesh.num_tets(); ++t)
    if (std::abs(signed_volume(mesh, positions, t)) <= tol)
      throw DegenerateTetError("degenerate deformed tet " + std::to_string(t), t);
  return {lumped_volumes(mesh, positions), laplacian(mesh, positions)};
}

std::vector<double> diffusion_step(const DiffusionOperators& ops, std::span<const double> rho, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  const int n = ops.L.dimension();
  if (static_cast<int>(rho.size()) != n) throw std::invalid_argument("density size does not match operators");
  std::vector<Triplet> trips;
  trips.reserve(ops.L.matrix().nonZeros() + n);
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, ops.A[i]);
    for (SpMat::InnerIterator it(ops.L.matrix(), i); it; ++it) trips.emplace_back(i, it.col(), dt * it.value());
  }
  // Solve for the increment so solver error scales with the change, not with rho.
  const Eigen::Map<const Eigen::VectorXd> r(rho.data(), n);
  const Eigen::VectorXd rhs = -dt * (ops.L.matrix() * r);
  const Eigen::VectorXd x = r + solve(LinearSystem(n, std::move(trips)), rhs);
  return {x.data(), x.data() + n};
}

std::vector<Vec3> density_gradient(const TetMesh& mesh, std::span<const Vec3> positions,
                                   std::span<const double> rho_vertex) {
  return tet_gradients(mesh, positions, rho_vertex);
}

std::vector<Vec3> vertex_density_gradient(const TetMesh& mesh, std::span<const Vec3> positions,
                                          std::span<const double> rho_vertex) {
  const auto g = tet_gradients(mesh, positions, rho_vertex);
  return tet_to_vertex(mesh, positions, std::span<const Vec3>(g));
}

std::vector<Vec3> velocity_field(std::span<const double> rho_vertex, std::span<const Vec3> grad_vertex) {
  std::vector<Vec3> v(rho_vertex.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!(rho_vertex[i] > 0)) throw std::domain_error("non-positive density at vertex " + std::to_string(i));
    v[i] = -grad_vertex[i] / rho_vertex[i];
  }
  return v;
}

std::vector<Vec3> project_boundary_velocity(std::span<const Vec3> positions, std::span<const Vec3> velocity,
                                            const std::vector<char>& boundary_mask) {
  std::vector<Vec3> out(velocity.begin(), velocity.end());
  for (size_t i = 0; i < out.size(); ++i)
    if (boundary_mask[i]) {
      const Vec3 n = positions[i].normalized();
      out[i] -= out[i].dot(n) * n;
    }
  return out;
}

Points advect_and_renormalize(std::span<const Vec3> positions, std::span<const Vec3> velocity, double dt,
                              const std::vector<char>& boundary_mask) {
  Points out(positions.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = positions[i] + dt * velocity[i];
    if (boundary_mask[i]) out[i].normalize();
  }
  return out;
}

DensityField recouple_density(const TetMesh& mesh, std::span<const Vec3> positions,
                              std::span<const double> population) {
  DensityField d;
  d.population.assign(population.begin(), population.end());
  d.rho_tet.resize(mesh.num_tets());
  int bad = 0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double v = signed_volume(mesh, positions, t);
    if (!(v > 0)) ++bad;
    d.rho_tet[t] = population[t] / v;
  }
  if (bad) throw CorrectionError("cannot recouple density on folded tets", bad);
  d.rho_vertex = tet_to_vertex(mesh, positions, std::span<const double>(d.rho_tet));
  return d;
}

}  // namespace volball
