#pragma once

#include <span>

#include "volball/mesh.hpp"
#include "volball/sparse.hpp"

namespace volball {

/// Per-edge cotangent weights k_uv = sum over incident tets of l * cot(theta) / 12,
/// where l is the length of the opposite edge and theta its dihedral angle.
/// Indexed like mesh.edges(); evaluated at `positions` with unsigned volumes.
std::vector<double> tet_cotangent_weights(const TetMesh& mesh, std::span<const Vec3> positions);

/// Positive semidefinite Laplacian L = -M^H: off-diagonals -k_uv, diagonals sum of k_uv.
LinearSystem laplacian(const TetMesh& mesh, std::span<const Vec3> positions);

/// Lumped vertex volumes: a quarter of the incident tet volumes (unsigned).
std::vector<double> lumped_volumes(const TetMesh& mesh, std::span<const Vec3> positions);

/// Per-tet gradient of the piecewise-linear interpolant of a vertex field.
std::vector<Vec3> tet_gradients(const TetMesh& mesh, std::span<const Vec3> positions, std::span<const double> field);

/// Volume-weighted average of per-tet values onto vertices (rows sum to one).
std::vector<double> tet_to_vertex(const TetMesh& mesh, std::span<const Vec3> positions,
                                  std::span<const double> tet_values);
std::vector<Vec3> tet_to_vertex(const TetMesh& mesh, std::span<const Vec3> positions,
                                std::span<const Vec3> tet_values);

/// Row-stochastic tet-to-vertex averaging matrix (|V| x |T|).
SpMat tet_to_vertex_matrix(const TetMesh& mesh, std::span<const Vec3> positions);

/// Dirichlet data fixing every boundary vertex to `positions` (three columns).
DirichletConstraints boundary_constraints(const TetMesh& mesh, std::span<const Vec3> positions);

}  // namespace volball
