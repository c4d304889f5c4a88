#include "volball/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "volball/stats.hpp"

namespace volball {

double tet_regularity(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const std::array<double, 6> e{(b - a).norm(), (c - a).norm(), (d - a).norm(),
                                (c - b).norm(), (d - b).norm(), (d - c).norm()};
  double sum = 0.0;
  for (double l : e) sum += l;
  double r = 0.0;
  for (double l : e) r += std::abs(l / sum - 1.0 / 6.0);
  return r;
}

RemeshQuality quality_metrics(const TetMesh& mesh) { return quality_metrics(mesh, mesh.vertices()); }

RemeshQuality quality_metrics(const TetMesh& mesh, std::span<const Vec3> positions) {
  RemeshQuality q;
  std::vector<double> vol = tet_volumes(mesh, positions);
  for (const Tet& t : mesh.tets())
    q.regularity.push_back(tet_regularity(positions[t[0]], positions[t[1]], positions[t[2]], positions[t[3]]));
  q.delta_size = stddev(vol);
  q.delta_shape = mean(q.regularity);
  return q;
}

PullbackResult pullback(const TetMesh& source, std::span<const Vec3> forward_positions, const TetMesh& templ) {
  const PointLocator locator(source, forward_positions);
  const auto& faces = source.boundary_faces();
  const auto& owners = source.boundary_face_tets();
  PullbackResult out;
  out.positions.reserve(templ.num_vertices());
  for (const Vec3& p : templ.vertices()) {
    std::optional<BarycentricCoord> bc = locator.locate(p);
    if (!bc) {
      double best = std::numeric_limits<double>::max();
      Vec3 q = p;
      int owner = -1;
      for (size_t f = 0; f < faces.size(); ++f) {
        const Vec3 c = closest_point_on_triangle(p, forward_positions[faces[f][0]], forward_positions[faces[f][1]],
                                                 forward_positions[faces[f][2]]);
        const double d = (c - p).squaredNorm();
        if (d < best) {
          best = d;
          q = c;
          owner = owners[f];
        }
      }
      BarycentricCoord snap;
      snap.tet_index = owner;
      snap.lambdas = barycentric(source, forward_positions, owner, q);
      double sum = 0.0;
      for (double& l : snap.lambdas) sum += (l = std::max(l, 0.0));
      for (double& l : snap.lambdas) l /= sum;
      bc = snap;
      ++out.snapped;
    }
    out.positions.push_back(barycentric_to_point(source, source.vertices(), *bc));
  }
  return out;
}

}  // namespace volball
