#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "volball/drivers.hpp"
#include "volball/fem.hpp"
#include "volball/shapes.hpp"
#include "volball/sphere.hpp"

using namespace volball;

namespace {

Mat3 edges(const Points& x, const Tet& t) {
  Mat3 e;
  for (int k = 0; k < 3; ++k) e.col(k) = x[t[k + 1]] - x[t[0]];
  return e;
}

// Re-summation of the energies from raw arrays: K from eigenvalues of J'J, gradients from 3x3 solves.
Energies energies_oracle(const TetMesh& m, const Points& x, const std::vector<double>& rho,
                         const std::vector<double>& w, double alpha) {
  Energies e;
  for (int t = 0; t < m.num_tets(); ++t) {
    const Tet& tet = m.tets()[t];
    const Mat3 J = edges(x, tet) * edges(m.vertices(), tet).inverse();
    const Eigen::SelfAdjointEigenSolver<Mat3> es(J.transpose() * J);
    const double k = std::sqrt(es.eigenvalues()[2] / es.eigenvalues()[0]);
    e.qc += w[t] * std::log(k) * std::log(k);
    const Vec3 drho(rho[tet[1]] - rho[tet[0]], rho[tet[2]] - rho[tet[0]], rho[tet[3]] - rho[tet[0]]);
    const Vec3 g = edges(x, tet).transpose().fullPivLu().solve(drho);
    e.dem += w[t] * g.squaredNorm();
  }
  e.deq = e.dem + alpha * e.qc;
  return e;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

PopulationInput tet_population(const TetMesh& m, SyntheticDensity kind) {
  return {synthetic_population(m, kind), false};
}

void check_all_fold_free(const RunResult& r) {
  for (const IterationRecord& it : r.report.iterations) CHECK(it.folds_post == 0);
  CHECK(r.report.final.folds == 0);
}

void check_on_sphere(const TetMesh& m, const Points& x) {
  for (int b : m.boundary_vertices()) CHECK(std::abs(x[b].norm() - 1.0) < 1e-12);
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.K_T = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.n_max = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.C = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("energies of the identity with constant density vanish") {
  const TetMesh m = uniform_ball_mesh(1);
  const std::vector<double> rho(m.num_vertices(), 2.0);
  const auto w = tet_volumes(m, m.vertices());
  const Energies e = compute_energies(m, m.vertices(), rho, frames_of(m, m.vertices()), 0.01, w);
  CHECK(std::abs(e.qc) < 1e-20);
  CHECK(std::abs(e.dem) < 1e-20);
  CHECK(std::abs(e.deq) < 1e-20);
}

TEST_CASE("scaling maps carry no quasi-conformal energy") {
  const TetMesh m = uniform_ball_mesh(1);
  const auto w = tet_volumes(m, m.vertices());
  const std::vector<double> rho(m.num_vertices(), 1.0);
  for (double s : {0.3, 1.0, 7.0}) {
    Points x = m.vertices();
    for (auto& p : x) p *= s;
    CHECK(compute_energies(m, x, rho, frames_of(m, x), 0.01, w).qc < 1e-20);
  }
}

TEST_CASE("energies match a brute-force re-summation") {
  const TetMesh m = stretched_ball_mesh(1, 1.5, 0.2, 3);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Points x = m.vertices();
  for (auto& p : x) p = Vec3(1.2 * p.x() + 0.1 * p.y(), 0.9 * p.y(), p.z() + 0.05 * p.x());
  std::vector<double> rho(m.num_vertices()), w(m.num_tets());
  for (auto& r : rho) r = u(rng);
  for (auto& v : w) v = u(rng);
  const Energies got = compute_energies(m, x, rho, frames_of(m, x), 0.3, w);
  const Energies want = energies_oracle(m, x, rho, w, 0.3);
  CHECK(got.qc == doctest::Approx(want.qc).epsilon(1e-12));
  CHECK(got.dem == doctest::Approx(want.dem).epsilon(1e-12));
  CHECK(got.deq == doctest::Approx(want.deq).epsilon(1e-12));

  const Energies plain = compute_energies(m, x, rho, frames_of(m, x), 0.0, w);
  CHECK(plain.deq == plain.dem);
}

TEST_CASE("distortion of an affine map") {
  const TetMesh m = uniform_ball_mesh(1);
  Points x = m.vertices();
  for (auto& p : x) p = Vec3(3.0 * p.x(), p.y(), p.z());
  for (double k : distortion(m, x)) CHECK(k == doctest::Approx(3.0).epsilon(1e-10));
  for (auto& p : x) p.x() = -p.x();
  for (double k : distortion(m, x)) CHECK(k == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("initial density variance of a hemisphere split") {
  const TetMesh m = uniform_ball_mesh(1);
  const double v = initial_density_variance(m, tet_population(m, SyntheticDensity::hemisphere));
  CHECK(v > 0.15);
  CHECK(v < 0.4);
  CHECK(initial_density_variance(m, tet_population(m, SyntheticDensity::volume)) < 1e-20);
}

TEST_CASE("initial ball of a ball mesh is the identity") {
  const TetMesh m = uniform_ball_mesh(1);
  const BallInit b = initialize_ball(m, BoundaryMode::conformal);
  CHECK(b.harmonic_folds == 0);
  for (int v = 0; v < m.num_vertices(); ++v) CHECK((b.positions[v] - m.vertices()[v]).norm() < 1e-8);
}

TEST_CASE("initial ball of an ellipsoid is fold free on the sphere") {
  const TetMesh m = ellipsoid_mesh(1, Vec3(2, 1, 1));
  const BallInit b = initialize_ball(m, BoundaryMode::conformal);
  CHECK(count_folds(m, b.positions) == 0);
  check_on_sphere(m, b.positions);
}

TEST_CASE("3DQC on a near-isometric ball stops at once") {
  const TetMesh m = uniform_ball_mesh(1);
  const RunResult r = run_3dqc(m, SolverConfig{});
  CHECK(r.report.converged);
  CHECK(r.report.iterations.size() <= 3);
  CHECK(r.report.final.mean_K == doctest::Approx(r.report.iterations.front().mean_K).epsilon(1e-2));
  check_all_fold_free(r);
}

TEST_CASE("3DQC reduces distortion of a stretched ball") {
  const TetMesh m = stretched_ball_mesh(1, 2.5);
  const RunResult r = run_3dqc(m, SolverConfig{});
  REQUIRE(r.report.iterations.size() >= 2);
  CHECK(r.report.final.mean_K < r.report.iterations.front().mean_K);
  for (size_t i = 1; i < r.report.iterations.size(); ++i)
    CHECK(r.report.iterations[i].energy.qc <= r.report.iterations[i - 1].energy.qc);
  check_all_fold_free(r);
  check_on_sphere(m, r.positions);
  CHECK(r.report.method == "3dqc");
}

TEST_CASE("3DDEM with uniform density terminates immediately") {
  const TetMesh m = uniform_ball_mesh(1);
  const RunResult r = run_3ddem(m, tet_population(m, SyntheticDensity::volume), SolverConfig{});
  CHECK(r.report.converged);
  CHECK(r.report.iterations.size() == 1);
  for (int v = 0; v < m.num_vertices(); ++v) CHECK((r.positions[v] - m.vertices()[v]).norm() < 1e-8);
}

TEST_CASE("3DDEM equalizes a hemisphere density") {
  const TetMesh m = uniform_ball_mesh(1);
  const RunResult r = run_3ddem(m, tet_population(m, SyntheticDensity::hemisphere), SolverConfig{});
  CHECK(r.report.final.initial_var_rho > 0.15);
  CHECK(r.report.final.var_rho < 1e-2);
  CHECK(r.report.final.var_rho < r.report.final.initial_var_rho);
  check_all_fold_free(r);
  check_on_sphere(m, r.positions);
  CHECK(r.rho_vertex.size() == static_cast<size_t>(m.num_vertices()));
  CHECK(r.K.size() == static_cast<size_t>(m.num_tets()));
}

TEST_CASE("3DDEM accepts vertex densities") {
  const TetMesh m = uniform_ball_mesh(1);
  PopulationInput p;
  for (const Vec3& v : m.vertices()) p.values.push_back(v.x() < 0.0 ? 4.0 : 1.0);
  p.vertex_density = true;
  const RunResult r = run_3ddem(m, p, SolverConfig{});
  CHECK(r.report.final.var_rho < r.report.final.initial_var_rho);
  check_all_fold_free(r);
}

TEST_CASE("invalid populations are rejected") {
  const TetMesh m = uniform_ball_mesh(1);
  PopulationInput p{std::vector<double>(m.num_tets(), 1.0), false};
  p.values[3] = 0.0;
  CHECK_THROWS(run_3ddem(m, p, SolverConfig{}));
  p.values.pop_back();
  CHECK_THROWS(run_3ddem(m, p, SolverConfig{}));
}

TEST_CASE("3DDEQ keeps every iteration fold free") {
  const TetMesh m = uniform_ball_mesh(1);
  for (double alpha : {0.0, 0.01, 1.0}) {
    SolverConfig c;
    c.alpha = alpha;
    const RunResult r = run_3ddeq(m, tet_population(m, SyntheticDensity::hemisphere), c);
    CHECK(r.report.final.var_rho < r.report.final.initial_var_rho);
    check_all_fold_free(r);
    check_on_sphere(m, r.positions);
    CHECK(r.report.method == "3ddeq");
  }
}

TEST_CASE("runs are deterministic") {
  const TetMesh m = uniform_ball_mesh(1);
  const auto pop = tet_population(m, SyntheticDensity::smooth);
  const RunResult a = run_3ddeq(m, pop, SolverConfig{});
  const RunResult b = run_3ddeq(m, pop, SolverConfig{});
  CHECK(a.positions == b.positions);
  REQUIRE(a.report.iterations.size() == b.report.iterations.size());
  for (size_t i = 0; i < a.report.iterations.size(); ++i)
    CHECK(a.report.iterations[i].energy.deq == b.report.iterations[i].energy.deq);
  CHECK(mean(a.K) == mean(b.K));
}
