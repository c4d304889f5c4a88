#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace volball {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;
using Tet = std::array<int, 4>;
using Tri = std::array<int, 3>;

// Malformed input file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mesh violates a structural invariant (manifoldness, genus, orientation).
struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tetrahedron with repeated vertices or (numerically) zero volume.
struct DegenerateTetError : TopologyError {
  DegenerateTetError(const std::string& what, int tet) : TopologyError(what), tet_index(tet) {}
  int tet_index;
};

struct SolverError : std::runtime_error {
  SolverError(const std::string& what, int iters, double residual)
      : std::runtime_error(what), iterations(iters), relative_residual(residual) {}
  int iterations;
  double relative_residual;
};

// Overlap correction could not remove every fold within its pass budget.
struct CorrectionError : std::runtime_error {
  CorrectionError(const std::string& what, int folds) : std::runtime_error(what), residual_folds(folds) {}
  int residual_folds;
};

}  // namespace volball
