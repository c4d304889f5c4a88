#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "volball/remesh.hpp"
#include "volball/shapes.hpp"

using namespace volball;

namespace {

// Regularity and size spread recomputed from raw coordinate arrays.
struct RawQuality {
  double delta_size;
  double delta_shape;
};

RawQuality raw_quality(const std::vector<std::array<double, 3>>& v, const std::vector<std::array<int, 4>>& t) {
  std::vector<double> vol, reg;
  for (const auto& q : t) {
    double e[3][3];
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 3; ++c) e[k][c] = v[q[k + 1]][c] - v[q[0]][c];
    const double det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                       e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
    vol.push_back(std::abs(det) / 6.0);
    double len[6];
    int n = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += (v[q[a]][c] - v[q[b]][c]) * (v[q[a]][c] - v[q[b]][c]);
        len[n++] = std::sqrt(s);
      }
    double total = 0.0;
    for (double l : len) total += l;
    double r = 0.0;
    for (double l : len) r += std::abs(l / total - 1.0 / 6.0);
    reg.push_back(r);
  }
  double mv = 0.0, mr = 0.0;
  for (size_t i = 0; i < vol.size(); ++i) {
    mv += vol[i] / vol.size();
    mr += reg[i] / reg.size();
  }
  double ss = 0.0;
  for (double x : vol) ss += (x - mv) * (x - mv);
  return {std::sqrt(ss / (vol.size() - 1)), mr};
}

Points regular_tet() {
  return {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}, {0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}};
}

double mesh_volume(const TetMesh& m) {
  double s = 0.0;
  for (double v : tet_volumes(m, m.vertices())) s += v;
  return s;
}

}  // namespace

TEST_CASE("regularity of an equilateral tet is zero") {
  const Points p = regular_tet();
  CHECK(tet_regularity(p[0], p[1], p[2], p[3]) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("regularity with one long edge") {
  // Edges (2,1,1,1,1,1) only bound a flat tet, so the closed form is checked on its own.
  const double expected = std::abs(2.0 / 7.0 - 1.0 / 6.0) + 5.0 * std::abs(1.0 / 7.0 - 1.0 / 6.0);
  CHECK(expected == doctest::Approx(0.2381).epsilon(1e-4));
  CHECK(expected == doctest::Approx(10.0 / 42.0).epsilon(1e-12));

  // Edges (1.5,1,1,1,1,1) are realizable: two equilateral triangles hinged on a unit edge.
  const double h = std::sqrt(3.0) / 2.0;
  const double half = 0.75;
  const double y = std::sqrt(h * h - half * half);
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0.5, y, half), d(0.5, y, -half);
  CHECK((c - d).norm() == doctest::Approx(1.5));
  const double r = std::abs(1.5 / 6.5 - 1.0 / 6.0) + 5.0 * std::abs(1.0 / 6.5 - 1.0 / 6.0);
  CHECK(tet_regularity(a, b, c, d) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("regularity is scale and rotation invariant") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Mat3 rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  for (int i = 0; i < 100; ++i) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng)), d(u(rng), u(rng), u(rng));
    const double r = tet_regularity(a, b, c, d);
    CHECK(r >= 0.0);
    CHECK(tet_regularity(3.7 * a, 3.7 * b, 3.7 * c, 3.7 * d) == doctest::Approx(r).epsilon(1e-12));
    CHECK(tet_regularity(rot * a, rot * b, rot * c, rot * d) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("quality metrics match a raw-array recomputation") {
  for (const TetMesh& m : {uniform_ball_mesh(1), graded_ellipsoid_mesh(1), stretched_ball_mesh(1, 2.0, 0.3, 4)}) {
    std::vector<std::array<double, 3>> v;
    for (const Vec3& p : m.vertices()) v.push_back({p.x(), p.y(), p.z()});
    std::vector<std::array<int, 4>> t;
    for (const Tet& q : m.tets()) t.push_back({q[0], q[1], q[2], q[3]});
    const RawQuality want = raw_quality(v, t);
    const RemeshQuality got = quality_metrics(m);
    CHECK(got.delta_size == doctest::Approx(want.delta_size).epsilon(1e-12));
    CHECK(got.delta_shape == doctest::Approx(want.delta_shape).epsilon(1e-12));
    CHECK(got.regularity.size() == m.tets().size());
  }
}

TEST_CASE("equal-volume mesh has zero size spread") {
  Points p = regular_tet();
  const Vec3 n = (p[2] - p[1]).cross(p[3] - p[1]).normalized();
  p.push_back(p[0] - 2.0 * n.dot(p[0] - p[1]) * n);
  const TetMesh m(p, {{0, 1, 2, 3}, {4, 2, 1, 3}});
  const RemeshQuality r = quality_metrics(m);
  CHECK(r.delta_size == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.delta_shape == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ball template sizes") {
  const TetMesh a = uniform_ball_mesh(1), b = uniform_ball_mesh(2);
  const double ratio = static_cast<double>(b.num_tets()) / a.num_tets();
  CHECK(ratio > 8.0 * 0.7);
  CHECK(ratio < 8.0 * 1.3);
  const double ball = 4.0 * std::numbers::pi / 3.0;
  CHECK(mesh_volume(a) / ball > 0.9);
  CHECK(mesh_volume(a) / ball < 1.0);
  CHECK(std::abs(mesh_volume(uniform_ball_mesh()) / ball - 1.0) < 0.01);
  CHECK(count_folds(a, a.vertices()) == 0);
  CHECK(count_folds(b, b.vertices()) == 0);
}

TEST_CASE("pullback through the identity returns the template") {
  const TetMesh source = uniform_ball_mesh(1);
  const TetMesh templ = uniform_ball_mesh(1);
  const PullbackResult r = pullback(source, source.vertices(), templ);
  for (int v = 0; v < templ.num_vertices(); ++v) CHECK((r.positions[v] - templ.vertices()[v]).norm() < 1e-10);

  const PullbackResult twice = pullback(source, source.vertices(), TetMesh(r.positions, templ.tets()));
  for (int v = 0; v < templ.num_vertices(); ++v) CHECK((twice.positions[v] - r.positions[v]).norm() < 1e-10);
}

TEST_CASE("pullback through a rotation rotates back") {
  const TetMesh source = uniform_ball_mesh(1);
  const Mat3 rot = Eigen::AngleAxisd(0.4, Vec3(0.2, 1.0, -0.5).normalized()).toRotationMatrix();
  Points forward;
  for (const Vec3& p : source.vertices()) forward.push_back(rot * p);
  // Template strictly inside the ball so no snapping is involved.
  const TetMesh ball = uniform_ball_mesh(1);
  Points inner;
  for (const Vec3& p : ball.vertices()) inner.push_back(0.8 * p);
  const TetMesh templ(inner, ball.tets());
  const PullbackResult r = pullback(source, forward, templ);
  CHECK(r.snapped == 0);
  for (int v = 0; v < templ.num_vertices(); ++v) CHECK((r.positions[v] - rot.transpose() * inner[v]).norm() < 1e-8);
}

TEST_CASE("pullback of a deformed source vertex hits its rest position") {
  const TetMesh source = ellipsoid_mesh(1, Vec3(2, 1, 1));
  Points forward;
  for (const Vec3& p : source.vertices()) forward.push_back(Vec3(p.x() / 2.0, p.y(), p.z()));
  const int v = source.num_vertices() / 2;
  const TetMesh templ({forward[v], Vec3(0.01, 0.02, 0.03), Vec3(0.1, 0, 0), Vec3(0, 0.1, 0)}, {{0, 1, 2, 3}});
  const PullbackResult r = pullback(source, forward, templ);
  CHECK((r.positions[0] - source.vertices()[v]).norm() < 1e-10);
}

TEST_CASE("template points outside the deformed source are snapped and counted") {
  const TetMesh source = uniform_ball_mesh(1);
  Points forward = source.vertices();
  for (auto& p : forward) p *= 0.5;
  const TetMesh templ({Vec3(0.9, 0, 0), Vec3(0, 0, 0), Vec3(0, 0.1, 0), Vec3(0, 0, 0.1)}, {{0, 1, 2, 3}});
  const PullbackResult r = pullback(source, forward, templ);
  CHECK(r.snapped == 1);
  CHECK(r.positions[0].norm() <= 1.0 + 1e-12);
  CHECK(r.positions[0].norm() > 0.9);
}
