#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "volball/ball_init.hpp"
#include "volball/fem.hpp"
#include "volball/qc.hpp"
#include "volball/shapes.hpp"

using namespace volball;

namespace {

// Singular values of J by cyclic Jacobi rotations on J'J in long double, descending.
std::array<long double, 3> singular_values(const Mat3& J) {
  long double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      a[i][j] = 0;
      for (int k = 0; k < 3; ++k) a[i][j] += static_cast<long double>(J(k, i)) * J(k, j);
    }
  for (int sweep = 0; sweep < 60; ++sweep)
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (std::fabs(a[p][q]) < 1e-30L) continue;
        const long double tau = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const long double t = (tau >= 0 ? 1 : -1) / (std::fabs(tau) + std::sqrt(1 + tau * tau));
        const long double c = 1 / std::sqrt(1 + t * t), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const long double x = a[k][p], y = a[k][q];
          a[k][p] = c * x - s * y;
          a[k][q] = s * x + c * y;
        }
        for (int k = 0; k < 3; ++k) {
          const long double x = a[p][k], y = a[q][k];
          a[p][k] = c * x - s * y;
          a[q][k] = s * x + c * y;
        }
      }
  std::array<long double, 3> s{std::sqrt(a[0][0]), std::sqrt(a[1][1]), std::sqrt(a[2][2])};
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

Mat3 random_matrix(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u(rng);
  return m;
}

void check_triple(const Vec3& got, const Vec3& want, double tol = 1e-12) {
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
}

Points apply(const Mat3& a, const Points& x) {
  Points y;
  for (const Vec3& p : x) y.push_back(a * p);
  return y;
}

}  // namespace

TEST_CASE("jacobians of identity, scaling and affine maps") {
  const TetMesh m = uniform_ball_mesh(1);
  for (const Mat3& J : jacobian_per_tet(m, m.vertices())) CHECK((J - Mat3::Identity()).norm() < 1e-12);
  Points twice = m.vertices();
  for (auto& p : twice) p *= 2.0;
  for (const Mat3& J : jacobian_per_tet(m, twice)) CHECK((J - 2.0 * Mat3::Identity()).norm() < 1e-12);
  std::mt19937 rng(5);
  const Mat3 a = random_matrix(rng);
  Points y = apply(a, m.vertices());
  for (auto& p : y) p += Vec3(0.5, -1.0, 2.0);
  for (const Mat3& J : jacobian_per_tet(m, y)) CHECK((J - a).norm() < 1e-10);
}

TEST_CASE("frame of the identity and a diagonal stretch") {
  Frame f = frame_decompose(Mat3::Identity());
  check_triple(f.lambda, Vec3(1, 1, 1));
  CHECK(qc_coefficient(f.lambda) == doctest::Approx(1.0));
  f = frame_decompose(Vec3(2, 1, 1).asDiagonal().toDenseMatrix());
  check_triple(f.lambda, Vec3(2, 1, 1));
  CHECK(qc_coefficient(f.lambda) == doctest::Approx(2.0));
}

TEST_CASE("frame of a reflection carries a negative smallest eigenvalue") {
  const Frame f = frame_decompose(Vec3(-1, 1, 1).asDiagonal().toDenseMatrix());
  check_triple(f.lambda, Vec3(1, 1, -1));
  CHECK(qc_coefficient(f.lambda) == doctest::Approx(-1.0));
}

TEST_CASE("frames reconstruct J'J and have a right-handed gauge") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 J = random_matrix(rng);
    const Frame f = frame_decompose(J);
    const Mat3 d = f.lambda.cwiseAbs2().asDiagonal();
    CHECK((J.transpose() * J - f.W * d * f.W.transpose()).norm() < 1e-9 * J.squaredNorm());
    CHECK(f.W.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.lambda[0] >= f.lambda[1]);
    CHECK(f.lambda[1] >= std::abs(f.lambda[2]));
    CHECK((f.lambda[2] > 0) == (J.determinant() > 0));
  }
}

TEST_CASE("singular Jacobian is reported with its tet index") {
  Mat3 J = Mat3::Identity();
  J(2, 2) = 0.0;
  try {
    frame_decompose(J, 42);
    FAIL("expected DegenerateTetError");
  } catch (const DegenerateTetError& e) {
    CHECK(e.tet_index == 42);
  }
}

TEST_CASE("K matches an independent singular-value oracle") {
  std::mt19937 rng(23);
  int checked = 0;
  while (checked < 1000) {
    const Mat3 J = random_matrix(rng);
    if (J.determinant() <= 1e-3) continue;
    const auto s = singular_values(J);
    const Frame f = frame_decompose(J);
    const double k = static_cast<double>(s[0] / s[2]);
    CHECK(qc_coefficient(f.lambda) == doctest::Approx(k).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("K of an affine map on a mesh matches the oracle") {
  const TetMesh m = uniform_ball_mesh(1);
  const Mat3 a = (Mat3() << 2.0, 0.3, 0.0, 0.1, 1.0, 0.2, 0.0, -0.4, 0.7).finished();
  const auto s = singular_values(a);
  const double k = static_cast<double>(s[0] / s[2]);
  for (double got : qc_coefficients(frames_of(m, apply(a, m.vertices())))) CHECK(got == doctest::Approx(k).epsilon(1e-9));
}

TEST_CASE("flip examples") {
  check_triple(flip_eigenvalues(Vec3(1, 1, -1)), Vec3(1, 1, 1));
  check_triple(flip_eigenvalues(Vec3(2, 1.5, 1)), Vec3(2, 1.5, 1));
  const Vec3 f = flip_eigenvalues(Vec3(3, 2, -0.5));
  check_triple(f, Vec3(3, 2, 0.5));
  CHECK(qc_coefficient(f) == doctest::Approx(6.0));
}

TEST_CASE("flip is idempotent") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 l(u(rng), u(rng), u(rng));
    const Vec3 once = flip_eigenvalues(l);
    CHECK(flip_eigenvalues(once) == once);
  }
}

TEST_CASE("residual step examples") {
  check_triple(residual_step(Vec3(1, 1, 1), 50.0), Vec3(1, 1, 1));

  const double theta = 3.0 / 53.0;
  const Vec3 r = residual_step(Vec3(4, 2, 1), 50.0);
  check_triple(r, Vec3(4 - 2 * theta, 2, 1 + theta));
  CHECK(r[0] == doctest::Approx(3.886792).epsilon(1e-6));
  CHECK(r[2] == doctest::Approx(1.056604).epsilon(1e-6));
  CHECK(qc_coefficient(r) == doctest::Approx(3.67854).epsilon(1e-5));

  // K = 51 and C = 50: theta = 1/2, so a - R/2 and c + L/2.
  const Vec3 h = residual_step(Vec3(51, 26, 1), 50.0);
  check_triple(h, Vec3(51 - 12.5, 26, 1 + 12.5));
}

TEST_CASE("residual step strictly decreases K") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  int checked = 0;
  while (checked < 1000) {
    Vec3 l(u(rng), u(rng), u(rng));
    std::sort(l.data(), l.data() + 3, std::greater<>());
    if (l[0] / l[2] <= 1.0 + 1e-9) continue;
    CHECK(qc_coefficient(residual_step(l, 50.0)) < qc_coefficient(l));
    ++checked;
  }
}

TEST_CASE("truncation examples") {
  const Vec3 t = truncate_eigenvalues(Vec3(4, 2, 1), 2.0);
  check_triple(t, Vec3(10.0 / 3.0, 20.0 / 9.0, 5.0 / 3.0));
  CHECK(qc_coefficient(t) == doctest::Approx(2.0).epsilon(1e-12));
  check_triple(truncate_eigenvalues(Vec3(1.5, 1.2, 1), 10.0), Vec3(1.5, 1.2, 1));
  check_triple(truncate_eigenvalues(Vec3(0.7, 0.7, 0.7), 2.0), Vec3(0.7, 0.7, 0.7));
}

TEST_CASE("truncation caps the ratio and keeps the ordering") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    Vec3 l(u(rng), u(rng), u(rng));
    std::sort(l.data(), l.data() + 3, std::greater<>());
    const double kt = 1.5 + 20.0 * (i % 10) / 10.0;
    const Vec3 t = truncate_eigenvalues(l, kt);
    CHECK(t[0] / t[2] == doctest::Approx(std::min(l[0] / l[2], kt)).epsilon(1e-12));
    CHECK(t[0] >= t[1]);
    CHECK(t[1] >= t[2]);
    CHECK(t[2] > 0.0);
  }
}

TEST_CASE("coefficient matrix of the identity frame is the identity") {
  CHECK((coefficient_matrix(Frame{}) - Mat3::Identity()).norm() < 1e-15);
  Frame f;
  f.lambda = Vec3(4, 2, 1);
  CHECK((coefficient_matrix(f) - Vec3(0.5, 2.0, 8.0).asDiagonal().toDenseMatrix()).norm() < 1e-12);
}

TEST_CASE("identity frames reproduce the harmonic fill") {
  const TetMesh m = ellipsoid_mesh(1, Vec3(2, 1, 1));
  const BoundaryMap b = compute_boundary_sphere_map(m, BoundaryMode::conformal);
  const Points h = harmonic_fill(m, b);
  TetFrameField field;
  field.frames.assign(m.num_tets(), Frame{});
  const Points q = reconstruct_map_3dqcs(m, field, boundary_constraints(m, h));
  for (int v = 0; v < m.num_vertices(); ++v) CHECK((q[v] - h[v]).norm() < 1e-8);

  const TetMesh ball = uniform_ball_mesh(1);
  const Points id = reconstruct_map_3dqcs(ball, TetFrameField{std::vector<Frame>(ball.num_tets())},
                                          boundary_constraints(ball, ball.vertices()));
  for (int v = 0; v < ball.num_vertices(); ++v) CHECK((id[v] - ball.vertices()[v]).norm() < 1e-8);
}

TEST_CASE("frames of an affine map recover the map") {
  const TetMesh m = uniform_ball_mesh(1);
  const Mat3 a = (Mat3() << 1.5, 0.2, 0.0, -0.1, 0.8, 0.3, 0.0, 0.1, 1.2).finished();
  const Points target = apply(a, m.vertices());
  const Points q = reconstruct_map_3dqcs(m, frames_of(m, target), boundary_constraints(m, target));
  for (int v = 0; v < m.num_vertices(); ++v) CHECK((q[v] - target[v]).norm() < 1e-7);
}

TEST_CASE("a truncated frame does not fold its tet") {
  const TetMesh m = uniform_ball_mesh(1);
  TetFrameField field;
  field.frames.assign(m.num_tets(), Frame{});
  int inner = 0;
  for (int t = 0; t < m.num_tets(); ++t) {
    bool interior = true;
    for (int v : m.tets()[t]) interior = interior && !m.is_boundary(v);
    if (interior) {
      inner = t;
      break;
    }
  }
  field.frames[inner].lambda = truncate_eigenvalues(Vec3(40, 3, 1), 5.0);
  const Points q = reconstruct_map_3dqcs(m, field, boundary_constraints(m, m.vertices()));
  CHECK(signed_volume(m, q, inner) > 0.0);
  CHECK(count_folds(m, q) == 0);
}
