#pragma once

#include <complex>
#include <span>

#include "volball/mesh.hpp"

namespace volball {

/// Closed triangle surface with local vertex indexing.
struct SurfaceMesh {
  std::vector<Tri> faces;
  /// Volume-mesh vertex of each local vertex.
  std::vector<int> volume_index;
  /// Faces incident to each local vertex.
  std::vector<std::vector<int>> vertex_faces;
  /// Sorted neighbour lists.
  std::vector<std::vector<int>> neighbors;

  int num_vertices() const { return static_cast<int>(volume_index.size()); }
};

/// Boundary surface of a tet mesh; local vertex i is mesh.boundary_vertices()[i].
SurfaceMesh boundary_surface(const TetMesh& mesh);

/// Gather volume positions onto the surface's local vertices.
Points gather(const SurfaceMesh& surface, std::span<const Vec3> volume_positions);

/// det[a, b, c]; positive for a positively oriented triangle on a sphere centred at the origin.
inline double sphere_orientation(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

int count_sphere_flips(const SurfaceMesh& surface, std::span<const Vec3> x);

std::vector<double> triangle_areas(const SurfaceMesh& surface, std::span<const Vec3> x);

/// Symmetric cotangent weights 0.5 (cot a + cot b) per neighbour (aligned with surface.neighbors).
std::vector<std::vector<double>> surface_cotangent_weights(const SurfaceMesh& surface, std::span<const Vec3> x);

/// Ball automorphism sending c (|c| < 1) to the origin.
Vec3 mobius(const Vec3& x, const Vec3& c);

/// Compose Moebius maps until the area-weighted centroid of the sphere map is at the origin.
/// Steps that would flip triangles are shortened. Returns the final centroid norm.
double mobius_center(const SurfaceMesh& surface, Points& x, int max_iterations = 100);

/// Radial projection from the area centroid of `x`.
Points radial_sphere_map(const SurfaceMesh& surface, std::span<const Vec3> x);

/// Tutte embedding in the plane (uniform weights, face 0 as the outer triangle)
/// followed by inverse stereographic projection. Mirrored if needed so faces are
/// positively oriented.
Points tutte_sphere_map(const SurfaceMesh& surface);

/// Gauss-Seidel projected Laplacian smoothing on the sphere with the positive
/// part of the cotangent weights of `rest`. Moves that would flip a triangle are
/// rejected. Recentred after every sweep. Returns the number of sweeps performed.
int relax_conformal(const SurfaceMesh& surface, std::span<const Vec3> rest, Points& x, int max_sweeps = 200,
                    double tolerance = 1e-7);

struct SphereCorrectionStats {
  int initial_flips = 0;
  int passes = 0;
  int rolled_back_vertices = 0;
};

/// Remove flipped triangles of `current` (points on the unit sphere) relative to the
/// flip-free `reference`: north and south stereographic Beltrami passes with |mu|
/// truncated to 0.99 and a linear Beltrami solve, then a local rollback to the
/// reference for anything left. Always ends flip-free.
SphereCorrectionStats correct_sphere_flips(const SurfaceMesh& surface, std::span<const Vec3> reference,
                                           Points& current, int max_rounds = 5);

/// Beltrami coefficient of the affine map taking triangle (p0,p1,p2) to (q0,q1,q2) in the plane.
std::complex<double> beltrami_coefficient(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                          const Eigen::Vector2d& p2, const Eigen::Vector2d& q0,
                                          const Eigen::Vector2d& q1, const Eigen::Vector2d& q2);

/// Coefficient matrix of the linear Beltrami solver for a given mu.
Eigen::Matrix2d beltrami_matrix(std::complex<double> mu);

struct SphereDemStats {
  int iterations = 0;
  /// sd / mean of vertex densities.
  double initial_cv = 0.0;
  double final_cv = 0.0;
  int corrected_iterations = 0;
};

/// Area-weighted average of face densities (population / area) at each vertex.
std::vector<double> surface_vertex_density(const SurfaceMesh& surface, std::span<const double> face_population,
                                           std::span<const Vec3> x);

/// Density-equalizing flow on the unit sphere driven by per-face populations.
/// Stops once sd/mean of the vertex densities is below `tolerance` or after `max_iterations`.
SphereDemStats sphere_density_equalize(const SurfaceMesh& surface, std::span<const double> face_population, Points& x,
                                       double dt = 0.1, double tolerance = 1e-2, int max_iterations = 100);

/// sd / mean of population / area over faces.
double face_density_cv(const SurfaceMesh& surface, std::span<const double> face_population, std::span<const Vec3> x);

}  // namespace volball
