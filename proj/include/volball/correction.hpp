#pragma once

#include <span>
#include <string>

#include "volball/mesh.hpp"

namespace volball {

struct CorrectionPassLog {
  std::string pass;  // "boundary", "interior", "boundary_adjacent" or "local"
  int folds_before = 0;
  int folds_after = 0;
};

struct CorrectionOptions {
  int max_passes = 10;
  bool boundary_pass = true;
  bool interior_pass = true;
  bool boundary_adjacent_pass = true;
  bool local_pass = true;
};

struct CorrectionResult {
  Points positions;
  int initial_folds = 0;
  int residual_folds = 0;
  std::vector<CorrectionPassLog> log;
};

/// Overlap correction of a ball map `positions` of `mesh`:
///  1. boundary: flipped triangles on the sphere are repaired against `reference`
///     (or the input itself when no reference is given and its boundary is valid);
///  2. interior: inverted tets get their eigenvalues flipped and truncated at K_T,
///     other tets keep their frames, and the map is rebuilt with the boundary fixed;
///  3. boundary-adjacent: the boundary vertices of tets still inverted are freed,
///     interior vertices fixed, and the freed vertices projected back onto the sphere;
///  4. local: vertices of remaining inverted tets are moved towards their neighbour
///     centroid (tangentially on the sphere) when that improves their incident tets.
/// Repeated up to max_passes times. Does not throw on leftover folds; inspect residual_folds.
CorrectionResult correct_overlaps(const TetMesh& mesh, std::span<const Vec3> positions, double K_T,
                                  std::span<const Vec3> reference = {}, const CorrectionOptions& options = {});

}  // namespace volball
