#include "volball/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "volball/fem.hpp"
#include "volball/sphere.hpp"
#include "volball/stats.hpp"

namespace volball {

void SolverConfig::validate() const {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  if (!(K_T > 1)) throw std::invalid_argument("K_T must exceed 1");
  if (!(C > 0)) throw std::invalid_argument("C must be positive");
  if (!(alpha >= 0)) throw std::invalid_argument("alpha must be non-negative");
}

std::vector<double> tet_population(const TetMesh& mesh, const PopulationInput& population) {
  if (!population.vertex_density) return population.values;
  std::vector<double> out(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    double rho = 0.0;
    for (int v : mesh.tets()[t]) rho += population.values[v] / 4.0;
    out[t] = rho * signed_volume(mesh, t);
  }
  return out;
}

namespace {

double triangle_area(const Points& x, const Tri& f) {
  return 0.5 * (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]).norm();
}

std::vector<double> face_population_of(const TetMesh& mesh, const PopulationInput& pop) {
  if (!pop.vertex_density) return default_face_population(mesh, pop.values);
  std::vector<double> out;
  for (const auto& f : mesh.boundary_faces())
    out.push_back((pop.values[f[0]] + pop.values[f[1]] + pop.values[f[2]]) / 3.0 * triangle_area(mesh.vertices(), f));
  return out;
}

void check_population(const TetMesh& mesh, const PopulationInput& pop) {
  const size_t n = pop.vertex_density ? mesh.num_vertices() : mesh.num_tets();
  if (pop.values.size() != n) throw std::invalid_argument("population has the wrong length");
  for (double v : pop.values)
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("populations must be positive");
}

struct DensityState {
  std::vector<double> population;

  DensityState(const TetMesh& mesh, const PopulationInput& in) : population(tet_population(mesh, in)) {}
  DensityField at(const TetMesh& mesh, std::span<const Vec3> x) const {
    return recouple_density(mesh, x, population);
  }
};

struct StepOutcome {
  Points x;
  int folds_pre = 0;
  int folds_post = 0;
  bool corrected = false;
  bool backtracked = false;
};

int defects(const TetMesh& mesh, const SurfaceMesh& surface, std::span<const Vec3> x) {
  return count_folds(mesh, x) + count_sphere_flips(surface, gather(surface, x));
}

// Correct a candidate step; if folds survive, shorten the step from the fold-free `prev`.
StepOutcome accept_step(const TetMesh& mesh, const SurfaceMesh& surface, std::span<const Vec3> prev, Points cand,
                        const SolverConfig& config) {
  StepOutcome out;
  out.folds_pre = count_folds(mesh, cand);
  const int d = out.folds_pre + count_sphere_flips(surface, gather(surface, cand));
  if (d == 0 || !config.correction) {
    out.x = std::move(cand);
    out.folds_post = out.folds_pre;
    return out;
  }
  out.corrected = true;
  CorrectionResult r = correct_overlaps(mesh, cand, config.K_T, prev);
  if (r.residual_folds == 0) {
    out.x = std::move(r.positions);
    return out;
  }
  out.backtracked = true;
  const Points& target = r.positions;
  for (double s = 0.5; s > 1e-6; s *= 0.5) {
    Points y(prev.size());
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] = prev[i] + s * (target[i] - prev[i]);
      if (mesh.is_boundary(static_cast<int>(i))) y[i].normalize();
    }
    if (defects(mesh, surface, y) == 0) {
      out.x = std::move(y);
      return out;
    }
  }
  out.x.assign(prev.begin(), prev.end());
  return out;
}

std::vector<double> abs_volumes(const TetMesh& mesh, std::span<const Vec3> x) {
  auto v = tet_volumes(mesh, x);
  for (auto& a : v) a = std::abs(a);
  return v;
}

IterationRecord make_record(int n, const TetMesh& mesh, std::span<const Vec3> x, const DensityField& dens,
                            const SolverConfig& config, std::span<const double> weights) {
  IterationRecord r;
  r.iteration = n;
  const TetFrameField frames = frames_of(mesh, x, true);
  r.energy = compute_energies(mesh, x, dens.rho_vertex, frames, config.alpha, weights);
  r.var_rho = normalized_variance(dens.rho_vertex);
  std::vector<double> k = qc_coefficients(frames);
  for (auto& v : k) v = std::abs(v);
  r.mean_K = mean(k);
  r.sd_K = stddev(k);
  r.folds_pre = r.folds_post = count_folds(mesh, x);
  return r;
}

void finish(RunResult& res, const TetMesh& mesh, const DensityField& dens, double initial_var) {
  res.K = distortion(mesh, res.positions);
  res.rho_vertex = dens.rho_vertex;
  FinalStats& f = res.report.final;
  f.var_rho = normalized_variance(dens.rho_vertex);
  f.initial_var_rho = initial_var;
  f.mean_K = mean(res.K);
  f.sd_K = stddev(res.K);
  f.folds = count_folds(mesh, res.positions);
}

PopulationInput volume_population(const TetMesh& mesh) {
  PopulationInput p;
  p.values = tet_volumes(mesh, mesh.vertices());
  return p;
}

// Diffusion, gradient and velocity of one flow step.
Points flow_step(const TetMesh& mesh, std::span<const Vec3> x, const DensityField& dens, double dt) {
  const DiffusionOperators ops = build_operators(mesh, x);
  const auto rho = diffusion_step(ops, dens.rho_vertex, dt);
  const auto grad = vertex_density_gradient(mesh, x, rho);
  const auto vel = project_boundary_velocity(x, velocity_field(rho, grad), mesh.boundary_vertex_mask());
  return advect_and_renormalize(x, vel, dt, mesh.boundary_vertex_mask());
}

}  // namespace

BallInit initialize_ball(const TetMesh& mesh, BoundaryMode mode, std::span<const double> face_population, double K_T,
                         bool correct) {
  const BoundaryMap bm = compute_boundary_sphere_map(mesh, mode, face_population);
  BallInit init;
  init.positions = harmonic_fill(mesh, bm);
  init.harmonic_folds = count_folds(mesh, init.positions);
  if (correct && init.harmonic_folds > 0) {
    init.correction = correct_overlaps(mesh, init.positions, K_T, scatter_boundary(mesh, bm));
    if (init.correction.residual_folds > 0)
      throw CorrectionError("initial ball map still folds after correction", init.correction.residual_folds);
    init.positions = init.correction.positions;
  }
  return init;
}

Energies compute_energies(const TetMesh& mesh, std::span<const Vec3> positions, std::span<const double> rho_vertex,
                          const TetFrameField& frames, double alpha, std::span<const double> weights) {
  Energies e;
  const auto grad = tet_gradients(mesh, positions, rho_vertex);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double lk = std::log(std::abs(qc_coefficient(frames.frames[t].lambda)));
    e.qc += weights[t] * lk * lk;
    e.dem += weights[t] * grad[t].squaredNorm();
  }
  e.deq = e.dem + alpha * e.qc;
  return e;
}

std::vector<double> distortion(const TetMesh& mesh, std::span<const Vec3> positions) {
  auto k = qc_coefficients(frames_of(mesh, positions, true));
  for (auto& v : k) v = std::abs(v);
  return k;
}

double initial_density_variance(const TetMesh& mesh, const PopulationInput& population) {
  if (population.vertex_density) return normalized_variance(population.values);
  std::vector<double> rho(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) rho[t] = population.values[t] / signed_volume(mesh, t);
  return normalized_variance(tet_to_vertex(mesh, mesh.vertices(), std::span<const double>(rho)));
}

RunResult run_3ddem(const TetMesh& mesh, const PopulationInput& population, const SolverConfig& config) {
  config.validate();
  check_population(mesh, population);
  const SurfaceMesh surface = boundary_surface(mesh);
  const BoundaryMode mode = config.boundary_mode.value_or(BoundaryMode::density_equalizing);
  const auto fp = face_population_of(mesh, population);
  BallInit init = initialize_ball(mesh, mode, fp, config.K_T, config.correction);

  RunResult res;
  res.report.method = "3ddem";
  res.report.config = config;
  res.report.config.boundary_mode = mode;
  res.report.harmonic_folds = init.harmonic_folds;
  const DensityState state(mesh, population);
  const auto weights = abs_volumes(mesh, init.positions);
  Points x = std::move(init.positions);
  DensityField dens = state.at(mesh, x);
  {
    IterationRecord r = make_record(0, mesh, x, dens, config, weights);
    r.folds_pre = init.harmonic_folds;
    res.report.iterations.push_back(r);
  }
  for (int n = 1;; ++n) {
    if (coefficient_of_variation(dens.rho_vertex) < config.eps) {
      res.report.converged = true;
      break;
    }
    if (n > config.n_max) break;
    StepOutcome step = accept_step(mesh, surface, x, flow_step(mesh, x, dens, config.dt), config);
    x = std::move(step.x);
    if (step.corrected) ++res.report.corrections;
    if (count_folds(mesh, x) > 0) {
      // Only reachable with correction disabled: the density is undefined on inverted tets.
      IterationRecord r;
      r.iteration = n;
      r.folds_pre = step.folds_pre;
      r.folds_post = count_folds(mesh, x);
      res.report.iterations.push_back(r);
      res.positions = x;
      res.K = distortion(mesh, x);
      res.report.final.folds = r.folds_post;
      res.report.final.initial_var_rho = initial_density_variance(mesh, population);
      return res;
    }
    dens = state.at(mesh, x);
    IterationRecord r = make_record(n, mesh, x, dens, config, weights);
    r.folds_pre = step.folds_pre;
    r.corrected = step.corrected;
    r.backtracked = step.backtracked;
    res.report.iterations.push_back(r);
  }
  res.positions = std::move(x);
  finish(res, mesh, dens, initial_density_variance(mesh, population));
  return res;
}

RunResult run_3dqc(const TetMesh& mesh, const SolverConfig& config) {
  config.validate();
  const SurfaceMesh surface = boundary_surface(mesh);
  const BoundaryMode mode = config.boundary_mode.value_or(BoundaryMode::conformal);
  const PopulationInput population = volume_population(mesh);
  const auto fp = mode == BoundaryMode::density_equalizing ? face_population_of(mesh, population) : std::vector<double>{};
  BallInit init = initialize_ball(mesh, mode, fp, config.K_T, config.correction);

  RunResult res;
  res.report.method = "3dqc";
  res.report.config = config;
  res.report.config.boundary_mode = mode;
  res.report.harmonic_folds = init.harmonic_folds;
  const DensityState state(mesh, population);
  const auto weights = abs_volumes(mesh, init.positions);
  Points x = std::move(init.positions);
  DensityField dens = state.at(mesh, x);
  IterationRecord cur = make_record(0, mesh, x, dens, config, weights);
  cur.folds_pre = init.harmonic_folds;
  res.report.iterations.push_back(cur);

  for (int n = 1;; ++n) {
    if (cur.energy.qc <= 0.0) {
      res.report.converged = true;
      break;
    }
    if (n > config.n_max) break;
    TetFrameField frames = frames_of(mesh, x);
    for (auto& f : frames.frames) f.lambda = residual_step(flip_eigenvalues(f.lambda), config.C);
    Points cand = reconstruct_map_3dqcs(mesh, frames, boundary_constraints(mesh, x));
    StepOutcome step = accept_step(mesh, surface, x, std::move(cand), config);
    if (count_folds(mesh, step.x) > 0) break;
    const DensityField next_dens = state.at(mesh, step.x);
    IterationRecord r = make_record(n, mesh, step.x, next_dens, config, weights);
    if (r.energy.qc > cur.energy.qc) {
      res.report.converged = true;
      break;
    }
    r.folds_pre = step.folds_pre;
    r.corrected = step.corrected;
    r.backtracked = step.backtracked;
    if (step.corrected) ++res.report.corrections;
    const double decrease = (cur.energy.qc - r.energy.qc) / cur.energy.qc;
    x = std::move(step.x);
    dens = next_dens;
    cur = r;
    res.report.iterations.push_back(r);
    if (decrease < config.eps) {
      res.report.converged = true;
      break;
    }
  }
  res.positions = std::move(x);
  finish(res, mesh, dens, initial_density_variance(mesh, population));
  return res;
}

RunResult run_3ddeq(const TetMesh& mesh, const PopulationInput& population, const SolverConfig& config) {
  config.validate();
  check_population(mesh, population);
  const SurfaceMesh surface = boundary_surface(mesh);
  const BoundaryMode mode = config.boundary_mode.value_or(BoundaryMode::density_equalizing);
  const auto fp = face_population_of(mesh, population);
  BallInit init = initialize_ball(mesh, mode, fp, config.K_T, config.correction);

  RunResult res;
  res.report.method = "3ddeq";
  res.report.config = config;
  res.report.config.boundary_mode = mode;
  res.report.harmonic_folds = init.harmonic_folds;
  const DensityState state(mesh, population);
  const auto weights = abs_volumes(mesh, init.positions);
  Points x = std::move(init.positions);
  DensityField dens = state.at(mesh, x);
  {
    IterationRecord r = make_record(0, mesh, x, dens, config, weights);
    r.folds_pre = init.harmonic_folds;
    res.report.iterations.push_back(r);
  }
  for (int n = 1; n <= config.n_max; ++n) {
    Points ft = flow_step(mesh, x, dens, config.dt);
    {
      Points b = gather(surface, ft);
      if (count_sphere_flips(surface, b) > 0) {
        correct_sphere_flips(surface, gather(surface, x), b);
        for (int i = 0; i < surface.num_vertices(); ++i) ft[surface.volume_index[i]] = b[i];
      }
    }
    const TetFrameField fn = frames_of(mesh, x);
    TetFrameField target = frames_of(mesh, ft, true);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const Vec3 ln = flip_eigenvalues(fn.frames[t].lambda);
      const double k = ln[0] / ln[2];
      const double theta = (k - 1.0) / ((k - 1.0) + config.C);
      const Vec3 d2(-theta * (ln[0] - ln[1]), 0.0, theta * (ln[1] - ln[2]));
      Vec3 lt = flip_eigenvalues(target.frames[t].lambda);
      lt += config.alpha * config.dt * d2;
      lt[2] = std::max(lt[2], 1e-12 * lt[0]);
      target.frames[t].lambda = truncate_eigenvalues(lt, config.K_T);
    }
    Points cand = reconstruct_map_3dqcs(mesh, target, boundary_constraints(mesh, ft));
    StepOutcome step = accept_step(mesh, surface, x, std::move(cand), config);
    if (count_folds(mesh, step.x) > 0) {
      IterationRecord r;
      r.iteration = n;
      r.folds_pre = step.folds_pre;
      r.folds_post = count_folds(mesh, step.x);
      res.report.iterations.push_back(r);
      res.positions = std::move(step.x);
      res.K = distortion(mesh, res.positions);
      res.report.final.folds = r.folds_post;
      res.report.final.initial_var_rho = initial_density_variance(mesh, population);
      return res;
    }
    double disp = 0.0;
    for (size_t i = 0; i < x.size(); ++i) disp = std::max(disp, (step.x[i] - x[i]).norm());
    x = std::move(step.x);
    if (step.corrected) ++res.report.corrections;
    dens = state.at(mesh, x);
    IterationRecord r = make_record(n, mesh, x, dens, config, weights);
    r.folds_pre = step.folds_pre;
    r.corrected = step.corrected;
    r.backtracked = step.backtracked;
    res.report.iterations.push_back(r);
    if (disp < config.eps) {
      res.report.converged = true;
      break;
    }
  }
  res.positions = std::move(x);
  finish(res, mesh, dens, initial_density_variance(mesh, population));
  return res;
}

}  // namespace volball
