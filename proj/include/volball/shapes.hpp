#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "volball/mesh.hpp"

namespace volball {

/// Default resolution of uniform_ball_mesh.
inline constexpr int kDefaultBallResolution = 3;

/// Kuhn (6 tets per cell) subdivision of [-1,1]^3 with n cells per axis, mirrored
/// per octant so every cell's main diagonal starts at its vertex nearest the center.
/// Cells for which `keep(i,j,k)` is false are dropped; unused vertices removed.
/// Cells whose Kuhn split would contain a tet with all four vertices on the boundary
/// are instead coned from an added cell-center vertex (12 tets).
TetMesh kuhn_grid(int n, const std::function<bool(int, int, int)>& keep = {},
                  const std::function<Vec3(const Vec3&)>& warp = {});

/// [-1,1]^3 cube with n cells per axis.
TetMesh cube_mesh(int n);

/// Unit ball: Kuhn cube grid with 5*resolution cells per axis, mapped shell by shell
/// onto concentric spheres with a tangent warp that evens out the angular spacing.
TetMesh uniform_ball_mesh(int resolution = kDefaultBallResolution);

/// Map a point of [-1,1]^3 onto the unit ball (cube shells to sphere shells).
Vec3 cube_to_ball(const Vec3& x);

/// Ball scaled by per-axis factors.
TetMesh ellipsoid_mesh(int resolution, const Vec3& axes);

/// Ellipsoid with axes (2,1,1) whose vertical spacing is graded: nodes cluster near z = +top.
TetMesh graded_ellipsoid_mesh(int resolution, double gamma = 0.7);

/// Ball under the linear map diag(stretch, 1, 1/stretch), with interior vertices
/// optionally jittered by up to `jitter` grid spacings before stretching.
TetMesh stretched_ball_mesh(int resolution, double stretch, double jitter = 0.0, std::uint64_t seed = 1);

enum class SyntheticDensity {
  hemisphere,  // density 4 where x < 0, 1 elsewhere
  smooth,      // density rising linearly from 1 to 5 across the x extent
  regions,     // 3x3x3 bounding-box blocks with random densities in [1, 5]
  volume,      // population equal to the rest volume (density 1)
};

SyntheticDensity parse_synthetic_density(const std::string& name);

/// Per-tet populations (density at the tet centroid times rest volume).
std::vector<double> synthetic_population(const TetMesh& mesh, SyntheticDensity kind, std::uint64_t seed = 1);

/// U-shaped solid: a cube grid with a slot cut from the top middle.
TetMesh u_shape_mesh(int n);

}  // namespace volball
