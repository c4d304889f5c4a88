#pragma once

#include <span>

#include "volball/mesh.hpp"
#include "volball/sphere.hpp"

namespace volball {

enum class BoundaryMode { conformal, density_equalizing };

/// Unit-sphere positions for the boundary vertices of a mesh.
struct BoundaryMap {
  /// Volume vertex ids (mesh.boundary_vertices()).
  std::vector<int> vertices;
  Points points;
  bool used_tutte = false;
  int relax_sweeps = 0;
  SphereDemStats dem;
};

/// Face populations for the density-equalizing boundary map: each boundary face
/// inherits the density of its tet, multiplied by the face's rest area.
std::vector<double> default_face_population(const TetMesh& mesh, std::span<const double> tet_population);

/// Bijective map of the boundary surface onto the unit sphere. Starts from a radial
/// projection (or a Tutte embedding if that flips), relaxes it towards a conformal
/// map, centres it by a Moebius transformation and, in density mode, equalizes the
/// face densities given by `face_population` (indexed like mesh.boundary_faces()).
BoundaryMap compute_boundary_sphere_map(const TetMesh& mesh, BoundaryMode mode,
                                        std::span<const double> face_population = {});

/// Solve the discrete Laplace equation for interior vertices (three scalar solves)
/// with boundary vertices fixed at `positions`. Interior entries of `positions` are ignored.
Points harmonic_fill(const TetMesh& mesh, std::span<const Vec3> positions);
Points harmonic_fill(const TetMesh& mesh, const BoundaryMap& boundary);

/// Scatter boundary map points into a full per-vertex array (interior at the origin).
Points scatter_boundary(const TetMesh& mesh, const BoundaryMap& boundary);

}  // namespace volball
