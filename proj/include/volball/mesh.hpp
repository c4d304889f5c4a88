#pragma once

#include <optional>
#include <span>
#include <utility>

#include "volball/types.hpp"

namespace volball {

/// Signed volume of the tetrahedron (a, b, c, d): det[b-a, c-a, d-a] / 6.
double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Gradients of the four barycentric (hat) functions of a tetrahedron.
/// Requires a nonzero volume; the sign of the volume is taken into account.
std::array<Vec3, 4> barycentric_gradients(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Immutable tetrahedral solid with its derived boundary surface.
///
/// Construction validates the input: indices in range, no degenerate
/// tetrahedra, no isolated vertices, manifold faces, consistent orientation
/// and a closed genus-0 boundary. Negatively oriented tetrahedra are fixed by
/// swapping their last two vertices so that every stored tet has positive
/// signed volume.
class TetMesh {
 public:
  TetMesh(Points vertices, std::vector<Tet> tets);

  const Points& vertices() const { return vertices_; }
  const std::vector<Tet>& tets() const { return tets_; }
  const std::vector<Tri>& boundary_faces() const { return boundary_faces_; }
  /// Tet owning each boundary face (same index as boundary_faces()).
  const std::vector<int>& boundary_face_tets() const { return boundary_face_tets_; }
  const std::vector<char>& boundary_vertex_mask() const { return boundary_mask_; }
  bool is_boundary(int v) const { return boundary_mask_[v] != 0; }
  /// Sorted list of boundary vertex indices.
  const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
  /// Unique undirected edges (i < j), sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_tets() const { return static_cast<int>(tets_.size()); }

  /// Tets incident to vertex v, in CSR form.
  std::span<const int> vertex_tets(int v) const {
    return {vt_index_.data() + vt_offset_[v], vt_index_.data() + vt_offset_[v + 1]};
  }

  double bbox_diagonal() const { return bbox_diagonal_; }

 private:
  Points vertices_;
  std::vector<Tet> tets_;
  std::vector<Tri> boundary_faces_;
  std::vector<int> boundary_face_tets_;
  std::vector<char> boundary_mask_;
  std::vector<int> boundary_vertices_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> vt_offset_;
  std::vector<int> vt_index_;
  double bbox_diagonal_ = 0.0;
};

double signed_volume(const TetMesh& mesh, int tet_index);

/// Signed volume of tet t of `mesh` evaluated at `positions`.
double signed_volume(const TetMesh& mesh, std::span<const Vec3> positions, int tet_index);

/// Signed volumes of every tet at `positions`.
std::vector<double> tet_volumes(const TetMesh& mesh, std::span<const Vec3> positions);

/// Number of tets whose signed volume under `positions` is <= 0.
int count_folds(const TetMesh& mesh, std::span<const Vec3> positions);

/// Volume enclosed by the boundary surface at `positions` (divergence theorem).
double enclosed_volume(const TetMesh& mesh, std::span<const Vec3> positions);

struct BarycentricCoord {
  int tet_index = -1;
  std::array<double, 4> lambdas{};
};

Vec3 barycentric_to_point(const TetMesh& mesh, std::span<const Vec3> positions, const BarycentricCoord& bc);

/// Barycentric coordinates of p with respect to tet t at `positions`.
std::array<double, 4> barycentric(const TetMesh& mesh, std::span<const Vec3> positions, int t, const Vec3& p);

/// Uniform-grid point location over a tet mesh placed at arbitrary positions.
class PointLocator {
 public:
  static constexpr double kInsideTolerance = 1e-9;

  PointLocator(const TetMesh& mesh, std::span<const Vec3> positions);

  std::optional<BarycentricCoord> locate(const Vec3& p) const;

 private:
  std::optional<BarycentricCoord> best_of(std::span<const int> candidates, const Vec3& p) const;
  long cell_of(const Vec3& p) const;

  const TetMesh* mesh_;
  Points positions_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<int> cell_offset_;
  std::vector<int> cell_tets_;
};

/// Locate p in the mesh at its rest positions.
std::optional<BarycentricCoord> locate_point(const TetMesh& mesh, const Vec3& p);

/// Closest point to p on triangle (a, b, c).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace volball
