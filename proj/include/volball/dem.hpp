#pragma once

#include <span>

#include "volball/mesh.hpp"
#include "volball/sparse.hpp"

namespace volball {

struct DensityField {
  std::vector<double> population;
  /// population / current tet volume.
  std::vector<double> rho_tet;
  /// Volume-weighted average of rho_tet over incident tets.
  std::vector<double> rho_vertex;
};

struct DiffusionOperators {
  /// Lumped vertex volumes.
  std::vector<double> A;
  /// Positive semidefinite tet Laplacian.
  LinearSystem L;
};

/// Operators on the current positions. Throws DegenerateTetError on a degenerate deformed tet.
DiffusionOperators build_operators(const TetMesh& mesh, std::span<const Vec3> positions);

/// Backward Euler step: (A + dt L) rho_next = A rho.
std::vector<double> diffusion_step(const DiffusionOperators& ops, std::span<const double> rho, double dt);

/// Per-tet gradient of the vertex density.
std::vector<Vec3> density_gradient(const TetMesh& mesh, std::span<const Vec3> positions,
                                   std::span<const double> rho_vertex);

/// Per-vertex gradient: volume-weighted average of per-tet gradients.
std::vector<Vec3> vertex_density_gradient(const TetMesh& mesh, std::span<const Vec3> positions,
                                          std::span<const double> rho_vertex);

/// v = -grad(rho) / rho. Throws std::domain_error if any density is not positive.
std::vector<Vec3> velocity_field(std::span<const double> rho_vertex, std::span<const Vec3> grad_vertex);

/// Removes the normal component (n = position) of boundary velocities.
std::vector<Vec3> project_boundary_velocity(std::span<const Vec3> positions, std::span<const Vec3> velocity,
                                            const std::vector<char>& boundary_mask);

/// x + dt v, then boundary vertices are projected radially onto the unit sphere.
Points advect_and_renormalize(std::span<const Vec3> positions, std::span<const Vec3> velocity, double dt,
                              const std::vector<char>& boundary_mask);

/// Densities from populations and current volumes. Throws CorrectionError on a non-positive volume.
DensityField recouple_density(const TetMesh& mesh, std::span<const Vec3> positions,
                              std::span<const double> population);

}  // namespace volball
