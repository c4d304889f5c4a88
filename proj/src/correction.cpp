#include "volball/correction.hpp"

#include <algorithm>
#include <limits>

#include "volball/fem.hpp"
#include "volball/qc.hpp"
#include "volball/sphere.hpp"

namespace volball {

namespace {

// Frames of the current map with inverted tets flipped and truncated.
TetFrameField repaired_frames(const TetMesh& mesh, std::span<const Vec3> x, double K_T) {
  TetFrameField field = frames_of(mesh, x, true);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    Frame& f = field.frames[t];
    if (signed_volume(mesh, x, t) > 0.0 && f.lambda[2] > 0.0) continue;
    Vec3 l = flip_eigenvalues(f.lambda);
    if (!(l[2] > 1e-12 * l[0])) l[2] = 1e-12 * l[0];
    f.lambda = truncate_eigenvalues(l, K_T);
  }
  return field;
}

struct LocalScore {
  int folds;
  double min_volume;
  bool operator<(const LocalScore& o) const {
    return folds != o.folds ? folds > o.folds : min_volume < o.min_volume;
  }
};

LocalScore local_score(const TetMesh& mesh, std::span<const Vec3> x, int v) {
  LocalScore s{0, std::numeric_limits<double>::max()};
  for (int t : mesh.vertex_tets(v)) {
    const double vol = signed_volume(mesh, x, t);
    if (vol <= 0.0) ++s.folds;
    s.min_volume = std::min(s.min_volume, vol);
  }
  return s;
}

// Gauss-Seidel moves of vertices of inverted tets towards their neighbour centroid
// (tangentially on the sphere for boundary vertices), accepted when the local
// fold count or the smallest incident volume improves without flipping the surface.
void local_untangle(const TetMesh& mesh, const SurfaceMesh& surface, Points& x, int rounds) {
  std::vector<std::vector<int>> nb(mesh.num_vertices());
  for (const auto& [a, b] : mesh.edges()) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  std::vector<int> local(mesh.num_vertices(), -1);
  for (int i = 0; i < surface.num_vertices(); ++i) local[surface.volume_index[i]] = i;
  auto surface_ok = [&](int v) {
    if (local[v] < 0) return true;
    for (int f : surface.vertex_faces[local[v]]) {
      const Tri& t = surface.faces[f];
      const int a = surface.volume_index[t[0]], b = surface.volume_index[t[1]], c = surface.volume_index[t[2]];
      if (!(sphere_orientation(x[a], x[b], x[c]) > 0.0)) return false;
    }
    return true;
  };
  std::vector<char> active(mesh.num_vertices(), 0);
  for (int round = 0; round < rounds; ++round) {
    std::fill(active.begin(), active.end(), 0);
    bool any = false;
    for (int t = 0; t < mesh.num_tets(); ++t)
      if (signed_volume(mesh, x, t) <= 0.0)
        for (int v : mesh.tets()[t]) {
          active[v] = any = true;
          if (round % 2 == 1)
            for (int w : nb[v]) active[w] = 1;
        }
    if (!any) return;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (!active[v]) continue;
      Vec3 target = Vec3::Zero();
      int n = 0;
      for (int w : nb[v])
        if (!mesh.is_boundary(v) || mesh.is_boundary(w)) {
          target += x[w];
          ++n;
        }
      target /= n;
      const Vec3 old = x[v];
      const LocalScore before = local_score(mesh, x, v);
      bool moved = false;
      for (double step = 1.0; step > 1e-3 && !moved; step *= 0.5) {
        x[v] = old + step * (target - old);
        if (mesh.is_boundary(v)) x[v].normalize();
        moved = before < local_score(mesh, x, v) && surface_ok(v);
      }
      if (!moved) x[v] = old;
    }
  }
}

bool finite(const Points& x) {
  for (const auto& p : x)
    if (!p.allFinite()) return false;
  return true;
}

}  // namespace

CorrectionResult correct_overlaps(const TetMesh& mesh, std::span<const Vec3> positions, double K_T,
                                  std::span<const Vec3> reference, const CorrectionOptions& options) {
  CorrectionResult res;
  res.positions.assign(positions.begin(), positions.end());
  Points& x = res.positions;
  const SurfaceMesh surface = boundary_surface(mesh);
  const auto& bverts = mesh.boundary_vertices();
  for (int v : bverts) x[v].normalize();

  Points ref_boundary;
  if (!reference.empty()) {
    ref_boundary = gather(surface, reference);
    for (auto& p : ref_boundary) p.normalize();
  } else {
    ref_boundary = gather(surface, x);
    if (count_sphere_flips(surface, ref_boundary) > 0)
      throw CorrectionError("boundary has flipped triangles and no reference map was given",
                            count_sphere_flips(surface, ref_boundary));
  }

  res.initial_folds = count_folds(mesh, x);
  auto total_defects = [&] { return count_folds(mesh, x) + count_sphere_flips(surface, gather(surface, x)); };

  for (int pass = 0; pass < options.max_passes && total_defects() > 0; ++pass) {
    if (options.boundary_pass) {
      Points b = gather(surface, x);
      if (count_sphere_flips(surface, b) > 0) {
        const int before = count_folds(mesh, x);
        correct_sphere_flips(surface, ref_boundary, b);
        for (int i = 0; i < surface.num_vertices(); ++i) x[surface.volume_index[i]] = b[i];
        res.log.push_back({"boundary", before, count_folds(mesh, x)});
      }
    }
    if (options.interior_pass && count_folds(mesh, x) > 0) {
      const int before = count_folds(mesh, x);
      try {
        const Points y = reconstruct_map_3dqcs(mesh, repaired_frames(mesh, x, K_T), boundary_constraints(mesh, x));
        if (finite(y) && count_folds(mesh, y) <= before) x = y;
      } catch (const SolverError&) {
      }
      res.log.push_back({"interior", before, count_folds(mesh, x)});
    }
    if (options.boundary_adjacent_pass && count_folds(mesh, x) > 0) {
      const int before = count_folds(mesh, x);
      std::vector<char> freed(mesh.num_vertices(), 0);
      bool any = false;
      for (int t = 0; t < mesh.num_tets(); ++t)
        if (signed_volume(mesh, x, t) <= 0.0)
          for (int v : mesh.tets()[t])
            if (mesh.is_boundary(v)) freed[v] = any = true;
      if (any) {
        DirichletConstraints c;
        for (int v = 0; v < mesh.num_vertices(); ++v)
          if (!freed[v]) c.indices.push_back(v);
        c.values.resize(c.indices.size(), 3);
        for (size_t i = 0; i < c.indices.size(); ++i) c.values.row(i) = x[c.indices[i]].transpose();
        try {
          Points y = reconstruct_map_3dqcs(mesh, repaired_frames(mesh, x, K_T), c);
          for (int v = 0; v < mesh.num_vertices(); ++v)
            if (freed[v]) y[v].normalize();
          if (finite(y) && count_folds(mesh, y) < before) x = y;
        } catch (const SolverError&) {
        }
      }
      res.log.push_back({"boundary_adjacent", before, count_folds(mesh, x)});
    }
    if (options.local_pass && count_folds(mesh, x) > 0) {
      const int before = count_folds(mesh, x);
      local_untangle(mesh, surface, x, 10);
      res.log.push_back({"local", before, count_folds(mesh, x)});
    }
  }
  res.residual_folds = total_defects();
  return res;
}

}  // namespace volball
