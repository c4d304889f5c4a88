#include "volball/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/LU>

namespace volball {

namespace {

// Outward faces of a positively oriented tet, listed opposite vertex 0..3.
constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

struct FaceRecord {
  std::array<int, 3> key;  // sorted vertex ids
  Tri oriented;            // outward oriented
  int tet;
};

// Rotate so the smallest index comes first (preserves orientation).
Tri canonical_rotation(const Tri& f) {
  int k = 0;
  if (f[1] < f[k]) k = 1;
  if (f[2] < f[k]) k = 2;
  return {f[k], f[(k + 1) % 3], f[(k + 2) % 3]};
}

}  // namespace

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

std::array<Vec3, 4> barycentric_gradients(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 e1 = b - a, e2 = c - a, e3 = d - a;
  const double six_v = e1.dot(e2.cross(e3));
  std::array<Vec3, 4> g;
  g[1] = e2.cross(e3) / six_v;
  g[2] = e3.cross(e1) / six_v;
  g[3] = e1.cross(e2) / six_v;
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

TetMesh::TetMesh(Points vertices, std::vector<Tet> tets) : vertices_(std::move(vertices)), tets_(std::move(tets)) {
  const int nv = num_vertices();
  const int nt = num_tets();
  if (nt == 0) throw TopologyError("mesh has no tetrahedra");

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (const auto& p : vertices_) {
    if (!p.allFinite()) throw ParseError("non-finite vertex coordinate");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bbox_diagonal_ = nv > 0 ? (hi - lo).norm() : 0.0;
  const double degenerate_tol = 1e-14 * bbox_diagonal_ * bbox_diagonal_ * bbox_diagonal_;

  std::vector<int> use_count(nv, 0);
  for (int t = 0; t < nt; ++t) {
    Tet& tet = tets_[t];
    for (int i = 0; i < 4; ++i) {
      if (tet[i] < 0 || tet[i] >= nv)
        throw TopologyError("tet " + std::to_string(t) + " references vertex " + std::to_string(tet[i]) +
                            " out of range");
      for (int j = 0; j < i; ++j)
        if (tet[i] == tet[j]) throw DegenerateTetError("tet " + std::to_string(t) + " repeats a vertex", t);
    }
    const double vol = volball::signed_volume(vertices_[tet[0]], vertices_[tet[1]], vertices_[tet[2]], vertices_[tet[3]]);
    if (std::abs(vol) < degenerate_tol)
      throw DegenerateTetError("tet " + std::to_string(t) + " has near-zero volume", t);
    if (vol < 0) std::swap(tet[2], tet[3]);
    for (int v : tet) ++use_count[v];
  }
  for (int v = 0; v < nv; ++v)
    if (use_count[v] == 0) throw TopologyError("isolated vertex " + std::to_string(v));

  // Vertex -> tet adjacency.
  vt_offset_.assign(nv + 1, 0);
  for (int v = 0; v < nv; ++v) vt_offset_[v + 1] = vt_offset_[v] + use_count[v];
  vt_index_.resize(vt_offset_[nv]);
  {
    std::vector<int> fill(vt_offset_.begin(), vt_offset_.end() - 1);
    for (int t = 0; t < nt; ++t)
      for (int v : tets_[t]) vt_index_[fill[v]++] = t;
  }

  // Faces: pair up interior faces, keep singletons as boundary.
  std::vector<FaceRecord> faces;
  faces.reserve(4 * static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const Tet& tet = tets_[t];
    for (const auto& lf : kTetFaces) {
      Tri f{tet[lf[0]], tet[lf[1]], tet[lf[2]]};
      std::array<int, 3> key = f;
      std::sort(key.begin(), key.end());
      faces.push_back({key, f, t});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
    return a.key != b.key ? a.key < b.key : a.tet < b.tet;
  });
  for (size_t i = 0; i < faces.size();) {
    size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    const size_t count = j - i;
    if (count > 2) throw TopologyError("non-manifold face shared by more than two tets");
    if (count == 1) {
      boundary_faces_.push_back(faces[i].oriented);
      boundary_face_tets_.push_back(faces[i].tet);
    } else {
      const Tri a = canonical_rotation(faces[i].oriented);
      const Tri b = canonical_rotation(faces[i + 1].oriented);
      if (a == b)
        throw TopologyError("tets " + std::to_string(faces[i].tet) + " and " + std::to_string(faces[i + 1].tet) +
                            " overlap (inverted element in input)");
    }
    i = j;
  }

  // Boundary surface: closed, manifold, connected, Euler characteristic 2.
  boundary_mask_.assign(nv, 0);
  for (const auto& f : boundary_faces_)
    for (int v : f) boundary_mask_[v] = 1;
  for (int v = 0; v < nv; ++v)
    if (boundary_mask_[v]) boundary_vertices_.push_back(v);

  std::vector<std::pair<int, int>> directed;
  directed.reserve(3 * boundary_faces_.size());
  for (const auto& f : boundary_faces_)
    for (int k = 0; k < 3; ++k) directed.emplace_back(f[k], f[(k + 1) % 3]);
  std::sort(directed.begin(), directed.end());
  if (std::adjacent_find(directed.begin(), directed.end()) != directed.end())
    throw TopologyError("boundary surface is non-manifold (repeated directed edge)");
  for (const auto& [a, b] : directed)
    if (!std::binary_search(directed.begin(), directed.end(), std::make_pair(b, a)))
      throw TopologyError("boundary surface is not closed");
  const long n_bv = static_cast<long>(boundary_vertices_.size());
  const long n_be = static_cast<long>(directed.size() / 2);
  const long n_bf = static_cast<long>(boundary_faces_.size());
  const long euler = n_bv - n_be + n_bf;

  // Connectivity of the boundary via union-find on face vertices.
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& f : boundary_faces_) {
    parent[find(f[1])] = find(f[0]);
    parent[find(f[2])] = find(f[0]);
  }
  int components = 0;
  for (int v : boundary_vertices_)
    if (find(v) == v) ++components;
  if (components != 1)
    throw TopologyError("boundary has " + std::to_string(components) + " components (interior voids?)");
  if (euler != 2) throw TopologyError("boundary is not genus 0 (Euler characteristic " + std::to_string(euler) + ")");

  for (const auto& tet : tets_)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) edges_.emplace_back(std::min(tet[i], tet[j]), std::max(tet[i], tet[j]));
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

double signed_volume(const TetMesh& mesh, int tet_index) {
  return signed_volume(mesh, mesh.vertices(), tet_index);
}

double signed_volume(const TetMesh& mesh, std::span<const Vec3> positions, int tet_index) {
  const Tet& t = mesh.tets()[tet_index];
  return signed_volume(positions[t[0]], positions[t[1]], positions[t[2]], positions[t[3]]);
}

std::vector<double> tet_volumes(const TetMesh& mesh, std::span<const Vec3> positions) {
  std::vector<double> vols(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) vols[t] = signed_volume(mesh, positions, t);
  return vols;
}

int count_folds(const TetMesh& mesh, std::span<const Vec3> positions) {
  int folds = 0;
  for (int t = 0; t < mesh.num_tets(); ++t)
    if (signed_volume(mesh, positions, t) <= 0.0) ++folds;
  return folds;
}

double enclosed_volume(const TetMesh& mesh, std::span<const Vec3> positions) {
  double vol = 0.0;
  for (const auto& f : mesh.boundary_faces())
    vol += positions[f[0]].dot(positions[f[1]].cross(positions[f[2]])) / 6.0;
  return vol;
}

Vec3 barycentric_to_point(const TetMesh& mesh, std::span<const Vec3> positions, const BarycentricCoord& bc) {
  const Tet& t = mesh.tets()[bc.tet_index];
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 4; ++i) p += bc.lambdas[i] * positions[t[i]];
  return p;
}

std::array<double, 4> barycentric(const TetMesh& mesh, std::span<const Vec3> positions, int t, const Vec3& p) {
  const Tet& tet = mesh.tets()[t];
  const Vec3& a = positions[tet[0]];
  Mat3 e;
  e.col(0) = positions[tet[1]] - a;
  e.col(1) = positions[tet[2]] - a;
  e.col(2) = positions[tet[3]] - a;
  const Vec3 l = e.partialPivLu().solve(p - a);
  return {1.0 - l.sum(), l[0], l[1], l[2]};
}

PointLocator::PointLocator(const TetMesh& mesh, std::span<const Vec3> positions)
    : mesh_(&mesh), positions_(positions.begin(), positions.end()) {
  lo_ = Vec3::Constant(std::numeric_limits<double>::max());
  hi_ = -lo_;
  for (const auto& p : positions_) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  double edge_sum = 0.0;
  for (const auto& [a, b] : mesh.edges()) edge_sum += (positions_[a] - positions_[b]).norm();
  const double mean_edge = edge_sum / std::max<size_t>(1, mesh.edges().size());
  cell_ = std::max(2.0 * mean_edge, 1e-12);
  const Vec3 extent = hi_ - lo_;
  for (int k = 0; k < 3; ++k) dims_[k] = std::clamp(static_cast<int>(std::ceil(extent[k] / cell_)), 1, 512);

  const long ncells = static_cast<long>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::vector<int>> buckets(ncells);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    Vec3 tlo = positions_[mesh.tets()[t][0]], thi = tlo;
    for (int v : mesh.tets()[t]) {
      tlo = tlo.cwiseMin(positions_[v]);
      thi = thi.cwiseMax(positions_[v]);
    }
    std::array<int, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = std::clamp(static_cast<int>(std::floor((tlo[k] - lo_[k]) / cell_)), 0, dims_[k] - 1);
      b[k] = std::clamp(static_cast<int>(std::floor((thi[k] - lo_[k]) / cell_)), 0, dims_[k] - 1);
    }
    for (int i = a[0]; i <= b[0]; ++i)
      for (int j = a[1]; j <= b[1]; ++j)
        for (int k = a[2]; k <= b[2]; ++k) buckets[(static_cast<long>(i) * dims_[1] + j) * dims_[2] + k].push_back(t);
  }
  cell_offset_.assign(ncells + 1, 0);
  for (long c = 0; c < ncells; ++c) cell_offset_[c + 1] = cell_offset_[c] + static_cast<int>(buckets[c].size());
  cell_tets_.reserve(cell_offset_[ncells]);
  for (const auto& b : buckets) cell_tets_.insert(cell_tets_.end(), b.begin(), b.end());
}

long PointLocator::cell_of(const Vec3& p) const {
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    const double x = (p[k] - lo_[k]) / cell_;
    if (x < -1e-9 * dims_[k] || x > dims_[k] * (1.0 + 1e-9)) return -1;
    c[k] = std::clamp(static_cast<int>(std::floor(x)), 0, dims_[k] - 1);
  }
  return (static_cast<long>(c[0]) * dims_[1] + c[1]) * dims_[2] + c[2];
}

std::optional<BarycentricCoord> PointLocator::best_of(std::span<const int> candidates, const Vec3& p) const {
  BarycentricCoord best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : candidates) {
    const auto l = barycentric(*mesh_, positions_, t, p);
    const double m = *std::min_element(l.begin(), l.end());
    if (m > best_min) {
      best_min = m;
      best.tet_index = t;
      best.lambdas = l;
    }
  }
  if (best.tet_index < 0 || best_min < -kInsideTolerance) return std::nullopt;
  return best;
}

std::optional<BarycentricCoord> PointLocator::locate(const Vec3& p) const {
  const long c = cell_of(p);
  if (c < 0) return std::nullopt;
  std::span<const int> bucket(cell_tets_.data() + cell_offset_[c], cell_tets_.data() + cell_offset_[c + 1]);
  if (auto hit = best_of(bucket, p)) return hit;
  std::vector<int> all(mesh_->num_tets());
  std::iota(all.begin(), all.end(), 0);
  return best_of(all, p);
}

std::optional<BarycentricCoord> locate_point(const TetMesh& mesh, const Vec3& p) {
  return PointLocator(mesh, mesh.vertices()).locate(p);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace volball
