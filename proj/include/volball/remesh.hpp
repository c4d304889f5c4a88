#pragma once

#include <span>
#include <vector>

#include "volball/mesh.hpp"

namespace volball {

struct RemeshQuality {
  double delta_size = 0.0;         // standard deviation of tet volumes
  double delta_shape = 0.0;        // mean of the per-tet regularity
  std::vector<double> regularity;  // R_i per tet
};

/// R = sum_j |e_j / sum_k e_k - 1/6| over the six edge lengths; 0 iff equilateral.
double tet_regularity(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

RemeshQuality quality_metrics(const TetMesh& mesh);
RemeshQuality quality_metrics(const TetMesh& mesh, std::span<const Vec3> positions);

struct PullbackResult {
  Points positions;  // template vertices mapped back into the source's rest coordinates
  int snapped = 0;   // template vertices outside the deformed source, snapped to its boundary
};

/// Maps every vertex of `templ` through the inverse of the piecewise-linear map
/// source.vertices() -> forward_positions.
PullbackResult pullback(const TetMesh& source, std::span<const Vec3> forward_positions, const TetMesh& templ);

}  // namespace volball
