#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Geometry>

#include "volball/mesh.hpp"
#include "volball/shapes.hpp"

using namespace volball;

namespace {

Points reference_tet() { return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }

// Independent scan: determinant by cofactor expansion.
double det_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const double m[3][3] = {{b.x() - a.x(), c.x() - a.x(), d.x() - a.x()},
                          {b.y() - a.y(), c.y() - a.y(), d.y() - a.y()},
                          {b.z() - a.z(), c.z() - a.z(), d.z() - a.z()}};
  return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
          m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
         6.0;
}

}  // namespace

TEST_CASE("single reference tet") {
  TetMesh m(reference_tet(), {{0, 1, 2, 3}});
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_tets() == 1);
  CHECK(m.boundary_faces().size() == 4);
  CHECK(m.boundary_vertices().size() == 4);
  CHECK(m.edges().size() == 6);
}

TEST_CASE("repeated vertex is degenerate") {
  CHECK_THROWS_AS(TetMesh(reference_tet(), {{0, 1, 1, 3}}), DegenerateTetError);
}

TEST_CASE("flat tet is degenerate") {
  Points p = reference_tet();
  p[3] = Vec3(0.3, 0.3, 0.0);
  CHECK_THROWS_AS(TetMesh(p, {{0, 1, 2, 3}}), DegenerateTetError);
}

TEST_CASE("index out of range and isolated vertex") {
  CHECK_THROWS_AS(TetMesh(reference_tet(), {{0, 1, 2, 7}}), TopologyError);
  Points p = reference_tet();
  p.push_back({5, 5, 5});
  CHECK_THROWS_AS(TetMesh(p, {{0, 1, 2, 3}}), TopologyError);
}

TEST_CASE("bipyramid: two tets sharing a face") {
  Points p = reference_tet();
  p.push_back({0.4, 0.4, -1.0});
  TetMesh m(p, {{0, 1, 2, 3}, {0, 2, 1, 4}});
  CHECK(m.boundary_faces().size() == 6);
  const long v = static_cast<long>(m.boundary_vertices().size());
  const long f = static_cast<long>(m.boundary_faces().size());
  CHECK(v - 9 + f == 2);
  CHECK(v == 5);
  CHECK(count_folds(m, m.vertices()) == 0);
}

TEST_CASE("negative tets are reoriented at load") {
  TetMesh m(reference_tet(), {{0, 1, 3, 2}});
  CHECK(signed_volume(m, 0) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("overlapping tets are rejected") {
  Points p = reference_tet();
  p.push_back({0.2, 0.2, 0.2});
  // Tet (0,1,2,4) sits on the same side of face (0,1,2) as (0,1,2,3).
  CHECK_THROWS_AS(TetMesh(p, {{0, 1, 2, 3}, {0, 1, 2, 4}}), TopologyError);
}

TEST_CASE("non-manifold face rejected") {
  Points p = reference_tet();
  p.push_back({0.3, 0.3, -1.0});
  p.push_back({0.3, 0.3, -2.0});
  CHECK_THROWS_AS(TetMesh(p, {{0, 1, 2, 3}, {0, 2, 1, 4}, {0, 2, 1, 5}}), TopologyError);
}

TEST_CASE("two disjoint tets rejected") {
  Points p = reference_tet();
  for (int i = 0; i < 4; ++i) p.push_back(p[i] + Vec3(5, 0, 0));
  CHECK_THROWS_AS(TetMesh(p, {{0, 1, 2, 3}, {4, 5, 6, 7}}), TopologyError);
}

TEST_CASE("signed volume examples") {
  const Points p = reference_tet();
  CHECK(signed_volume(p[0], p[1], p[2], p[3]) == doctest::Approx(1.0 / 6.0));
  CHECK(signed_volume(p[0], p[1], p[3], p[2]) == doctest::Approx(-1.0 / 6.0));
  CHECK(signed_volume(2 * p[0], 2 * p[1], 2 * p[2], 2 * p[3]) == doctest::Approx(8.0 / 6.0));
}

TEST_CASE("barycentric gradients of reference tet") {
  const Points p = reference_tet();
  const auto g = barycentric_gradients(p[0], p[1], p[2], p[3]);
  CHECK((g[0] - Vec3(-1, -1, -1)).norm() < 1e-14);
  CHECK((g[1] - Vec3(1, 0, 0)).norm() < 1e-14);
  CHECK((g[2] - Vec3(0, 1, 0)).norm() < 1e-14);
  CHECK((g[3] - Vec3(0, 0, 1)).norm() < 1e-14);
}

TEST_CASE("count_folds") {
  const TetMesh m = uniform_ball_mesh(1);
  CHECK(count_folds(m, m.vertices()) == 0);

  Points mirrored = m.vertices();
  for (auto& x : mirrored) x.x() = -x.x();
  CHECK(count_folds(m, mirrored) == m.num_tets());

  // Reflect an interior vertex through the plane of the face opposite it in one incident tet.
  int v = 0;
  while (m.is_boundary(v)) ++v;
  const int t0 = m.vertex_tets(v)[0];
  const Tet& t = m.tets()[t0];
  int opp[3], k = 0;
  for (int w : t)
    if (w != v) opp[k++] = w;
  const Vec3 a = m.vertices()[opp[0]], b = m.vertices()[opp[1]], c = m.vertices()[opp[2]];
  const Vec3 n = (b - a).cross(c - a).normalized();
  Points moved = m.vertices();
  moved[v] -= 2.0 * n.dot(moved[v] - a) * n;
  int expected = 0;
  for (const auto& tt : m.tets())
    if (det_volume(moved[tt[0]], moved[tt[1]], moved[tt[2]], moved[tt[3]]) <= 0) ++expected;
  CHECK(expected >= 1);
  CHECK(count_folds(m, moved) == expected);

  // Rigid motion invariance.
  const Mat3 r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  Points rigid = moved;
  for (auto& x : rigid) x = r * x + Vec3(3, -1, 2);
  CHECK(count_folds(m, rigid) == expected);
}

TEST_CASE("tet volumes sum to enclosed volume") {
  for (const TetMesh& m : {uniform_ball_mesh(1), cube_mesh(4), graded_ellipsoid_mesh(1), u_shape_mesh(6)}) {
    double sum = 0;
    for (double v : tet_volumes(m, m.vertices())) sum += v;
    CHECK(std::abs(sum - enclosed_volume(m, m.vertices())) < 1e-10 * sum);
  }
}

TEST_CASE("locate_point") {
  const TetMesh m = uniform_ball_mesh(1);
  const int k = 17;
  const Tet& t = m.tets()[k];
  Vec3 c = Vec3::Zero();
  for (int v : t) c += 0.25 * m.vertices()[v];
  const auto bc = locate_point(m, c);
  REQUIRE(bc);
  CHECK(bc->tet_index == k);
  for (double l : bc->lambdas) CHECK(l == doctest::Approx(0.25));

  const int v = m.tets()[5][2];
  const auto bv = locate_point(m, m.vertices()[v]);
  REQUIRE(bv);
  const Tet& tv = m.tets()[bv->tet_index];
  bool found = false;
  for (int i = 0; i < 4; ++i)
    if (tv[i] == v) {
      found = true;
      CHECK(bv->lambdas[i] == doctest::Approx(1.0));
    }
  CHECK(found);

  CHECK_FALSE(locate_point(m, Vec3(2, 0, 0)));
}

TEST_CASE("locate_point reproduces random barycentric samples") {
  const TetMesh m = uniform_ball_mesh(1);
  PointLocator loc(m, m.vertices());
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick(0, m.num_tets() - 1);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int s = 0; s < 1000; ++s) {
    BarycentricCoord bc;
    bc.tet_index = pick(rng);
    double sum = 0;
    for (auto& l : bc.lambdas) sum += (l = u(rng));
    for (auto& l : bc.lambdas) l /= sum;
    const auto got = loc.locate(barycentric_to_point(m, m.vertices(), bc));
    REQUIRE(got);
    CHECK(got->tet_index == bc.tet_index);
  }
}

TEST_CASE("closest point on triangle") {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  CHECK((closest_point_on_triangle({0.2, 0.2, 1}, a, b, c) - Vec3(0.2, 0.2, 0)).norm() < 1e-15);
  CHECK((closest_point_on_triangle({-1, -1, 0}, a, b, c) - a).norm() < 1e-15);
  CHECK((closest_point_on_triangle({1, 1, 0}, a, b, c) - Vec3(0.5, 0.5, 0)).norm() < 1e-15);
}

TEST_CASE("vertex_tets adjacency is consistent") {
  const TetMesh m = cube_mesh(3);
  long total = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    for (int t : m.vertex_tets(v)) {
      ++total;
      const Tet& tt = m.tets()[t];
      CHECK(std::find(tt.begin(), tt.end(), v) != tt.end());
    }
  CHECK(total == 4L * m.num_tets());
}
