#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "volball/ball_init.hpp"
#include "volball/correction.hpp"
#include "volball/dem.hpp"
#include "volball/qc.hpp"

namespace volball {

struct SolverConfig {
  double dt = 0.1;
  double eps = 1e-2;
  int n_max = 100;
  double K_T = 10.0;
  double C = 50.0;
  double alpha = 0.01;
  /// Unset: conformal for 3DQC, density_equalizing for 3DDEM and 3DDEQ.
  std::optional<BoundaryMode> boundary_mode;
  bool correction = true;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless dt > 0, eps > 0, n_max >= 1, K_T > 1, C > 0, alpha >= 0.
  void validate() const;
};

/// Per-tet populations, or per-vertex densities when `vertex_density` is set.
struct PopulationInput {
  std::vector<double> values;
  bool vertex_density = false;
};

/// Per-tet populations; vertex densities become mean vertex density times rest volume.
std::vector<double> tet_population(const TetMesh& mesh, const PopulationInput& population);

struct Energies {
  double qc = 0.0;
  double dem = 0.0;
  double deq = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  Energies energy;
  double var_rho = 0.0;
  double mean_K = 0.0;
  double sd_K = 0.0;
  int folds_pre = 0;
  int folds_post = 0;
  bool corrected = false;
  bool backtracked = false;
};

struct FinalStats {
  double var_rho = 0.0;
  double initial_var_rho = 0.0;
  double mean_K = 0.0;
  double sd_K = 0.0;
  int folds = 0;
  std::optional<double> delta_size;
  std::optional<double> delta_shape;
};

struct RunReport {
  std::string method;
  SolverConfig config;
  std::vector<IterationRecord> iterations;
  FinalStats final;
  bool converged = false;
  /// Folds of the plain harmonic initial map before correction.
  int harmonic_folds = 0;
  /// Iterations whose step needed the overlap correction.
  int corrections = 0;
};

struct RunResult {
  Points positions;
  RunReport report;
  /// Per-tet K and vertex densities of the final map.
  std::vector<double> K;
  std::vector<double> rho_vertex;
};

/// Initial ball: boundary sphere map, harmonic fill, overlap correction.
struct BallInit {
  Points positions;
  int harmonic_folds = 0;
  CorrectionResult correction;
};
BallInit initialize_ball(const TetMesh& mesh, BoundaryMode mode, std::span<const double> face_population = {},
                         double K_T = 10.0, bool correct = true);

/// Energies with quadrature weights `weights` (initial-ball tet volumes).
/// `rho_vertex` lives on `positions`; frames are taken positive.
Energies compute_energies(const TetMesh& mesh, std::span<const Vec3> positions, std::span<const double> rho_vertex,
                          const TetFrameField& frames, double alpha, std::span<const double> weights);

/// Per-tet K of the map rest -> positions, with inverted tets reported by |K|.
std::vector<double> distortion(const TetMesh& mesh, std::span<const Vec3> positions);

/// Var(rho / mean(rho)) of the input density on the rest mesh (vertex values).
double initial_density_variance(const TetMesh& mesh, const PopulationInput& population);

RunResult run_3dqc(const TetMesh& mesh, const SolverConfig& config);
RunResult run_3ddem(const TetMesh& mesh, const PopulationInput& population, const SolverConfig& config);
RunResult run_3ddeq(const TetMesh& mesh, const PopulationInput& population, const SolverConfig& config);

}  // namespace volball
