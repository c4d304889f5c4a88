#include "volball/ball_init.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "volball/fem.hpp"

namespace volball {

std::vector<double> default_face_population(const TetMesh& mesh, std::span<const double> tet_population) {
  const auto& faces = mesh.boundary_faces();
  const auto& owner = mesh.boundary_face_tets();
  const auto& x = mesh.vertices();
  std::vector<double> pop(faces.size());
  for (size_t f = 0; f < faces.size(); ++f) {
    const double rho = tet_population[owner[f]] / signed_volume(mesh, owner[f]);
    const double area = 0.5 * (x[faces[f][1]] - x[faces[f][0]]).cross(x[faces[f][2]] - x[faces[f][0]]).norm();
    pop[f] = rho * area;
  }
  return pop;
}

BoundaryMap compute_boundary_sphere_map(const TetMesh& mesh, BoundaryMode mode,
                                        std::span<const double> face_population) {
  const SurfaceMesh surface = boundary_surface(mesh);
  const Points rest = gather(surface, mesh.vertices());
  BoundaryMap map;
  map.vertices = surface.volume_index;
  map.points = radial_sphere_map(surface, rest);
  if (count_sphere_flips(surface, map.points) > 0) {
    map.points = tutte_sphere_map(surface);
    map.used_tutte = true;
    const int flips = count_sphere_flips(surface, map.points);
    if (flips > 0) throw CorrectionError("initial spherical embedding has flipped triangles", flips);
  }
  // A boundary that already lies on a sphere is mapped radially (the identity up to scale).
  const Vec3 centre = [&] {
    Vec3 c = Vec3::Zero();
    for (const auto& p : rest) c += p;
    return Vec3(c / static_cast<double>(rest.size()));
  }();
  double rmin = std::numeric_limits<double>::max(), rmax = 0.0;
  for (const auto& p : rest) {
    rmin = std::min(rmin, (p - centre).norm());
    rmax = std::max(rmax, (p - centre).norm());
  }
  const bool spherical = !map.used_tutte && rmax - rmin <= 1e-6 * rmax;
  if (!spherical) {
    mobius_center(surface, map.points);
    map.relax_sweeps = relax_conformal(surface, rest, map.points);
  }

  if (mode == BoundaryMode::density_equalizing) {
    if (face_population.size() != surface.faces.size())
      throw std::invalid_argument("density-equalizing boundary map needs one population per boundary face");
    map.dem = sphere_density_equalize(surface, face_population, map.points);
  }
  for (auto& p : map.points) p.normalize();
  const int flips = count_sphere_flips(surface, map.points);
  if (flips > 0) throw CorrectionError("boundary sphere map has flipped triangles", flips);
  return map;
}

Points scatter_boundary(const TetMesh& mesh, const BoundaryMap& boundary) {
  Points x(mesh.num_vertices(), Vec3::Zero());
  for (size_t i = 0; i < boundary.vertices.size(); ++i) x[boundary.vertices[i]] = boundary.points[i];
  return x;
}

Points harmonic_fill(const TetMesh& mesh, std::span<const Vec3> positions) {
  const LinearSystem l = laplacian(mesh, mesh.vertices());
  const Eigen::MatrixXd sol =
      solve_columns(l, Eigen::MatrixXd::Zero(mesh.num_vertices(), 3), boundary_constraints(mesh, positions));
  Points out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) out[v] = sol.row(v).transpose();
  return out;
}

Points harmonic_fill(const TetMesh& mesh, const BoundaryMap& boundary) {
  return harmonic_fill(mesh, scatter_boundary(mesh, boundary));
}

}  // namespace volball
