#include "volball/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace volball {

TetMesh kuhn_grid(int n, const std::function<bool(int, int, int)>& keep, const std::function<Vec3(const Vec3&)>& warp) {
  const int m = n + 1;
  auto vid = [m](int i, int j, int k) { return (i * m + j) * m + k; };
  auto cell = [n](int i, int j, int k) { return (i * n + j) * n + k; };
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

  std::vector<char> present(n * n * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) present[cell(i, j, k)] = !keep || keep(i, j, k);
  auto has = [&](int i, int j, int k) {
    return i >= 0 && j >= 0 && k >= 0 && i < n && j < n && k < n && present[cell(i, j, k)];
  };
  std::vector<char> on_boundary(m * m * m, 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        int count = 0;
        for (int d = 0; d < 8; ++d) count += has(i - (d & 1), j - ((d >> 1) & 1), k - ((d >> 2) & 1));
        on_boundary[vid(i, j, k)] = count > 0 && count < 8;
      }

  std::vector<Tet> tets;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (!present[cell(i, j, k)]) continue;
        // Mirror the Kuhn pattern per axis so each cell's main diagonal starts nearest the grid center.
        const std::array<int, 3> base{i, j, k};
        std::array<int, 3> flip{};
        for (int a = 0; a < 3; ++a) flip[a] = 2 * base[a] + 1 < n;
        auto at = [&](std::array<int, 3> d) {
          for (int a = 0; a < 3; ++a) d[a] = base[a] + (flip[a] ? 1 - d[a] : d[a]);
          return vid(d[0], d[1], d[2]);
        };
        std::vector<Tet> local;
        bool sliver = false;
        for (const auto& p : kPerms) {
          std::array<int, 3> d{0, 0, 0};
          Tet t;
          t[0] = at(d);
          for (int s = 0; s < 3; ++s) {
            ++d[p[s]];
            t[s + 1] = at(d);
          }
          sliver = sliver || std::all_of(t.begin(), t.end(), [&](int v) { return on_boundary[v]; });
          local.push_back(t);
        }
        if (sliver) {
          local.clear();
          const int center = m * m * m + cell(i, j, k);
          for (int axis = 0; axis < 3; ++axis)
            for (int side = 0; side < 2; ++side) {
              const int u = (axis + 1) % 3, w = (axis + 2) % 3;
              auto corner = [&](int du, int dw) {
                std::array<int, 3> d{};
                d[axis] = side;
                d[u] = du;
                d[w] = dw;
                return at(d);
              };
              local.push_back({center, corner(0, 0), corner(1, 0), corner(1, 1)});
              local.push_back({center, corner(0, 0), corner(1, 1), corner(0, 1)});
            }
        }
        tets.insert(tets.end(), local.begin(), local.end());
      }

  auto grid_point = [&](int i, int j, int k) -> Vec3 {
    const Vec3 x(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n, -1.0 + 2.0 * k / n);
    return warp ? warp(x) : x;
  };
  std::vector<int> remap(m * m * m + n * n * n, -1);
  Points verts;
  for (auto& t : tets)
    for (int& v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(verts.size());
        if (v < m * m * m) {
          verts.push_back(grid_point(v / (m * m), (v / m) % m, v % m));
        } else {
          const int c = v - m * m * m;
          const int i = c / (n * n), j = (c / n) % n, k = c % n;
          Vec3 x = Vec3::Zero();
          for (int d = 0; d < 8; ++d) x += grid_point(i + (d & 1), j + ((d >> 1) & 1), k + ((d >> 2) & 1));
          verts.push_back(x / 8.0);
        }
      }
      v = remap[v];
    }
  return TetMesh(std::move(verts), std::move(tets));
}

TetMesh cube_mesh(int n) { return kuhn_grid(n); }

Vec3 cube_to_ball(const Vec3& x) {
  const double t = x.cwiseAbs().maxCoeff();
  if (t == 0.0) return Vec3::Zero();
  Vec3 y = x / t;
  for (int k = 0; k < 3; ++k) y[k] = std::tan(std::numbers::pi / 4.0 * y[k]);
  return t * y.normalized();
}

TetMesh uniform_ball_mesh(int resolution) {
  return kuhn_grid(5 * std::max(1, resolution), {}, cube_to_ball);
}

TetMesh ellipsoid_mesh(int resolution, const Vec3& axes) {
  return kuhn_grid(5 * std::max(1, resolution), {}, [&](const Vec3& x) -> Vec3 {
    return cube_to_ball(x).cwiseProduct(axes);
  });
}

TetMesh graded_ellipsoid_mesh(int resolution, double gamma) {
  return kuhn_grid(5 * std::max(1, resolution), {}, [gamma](const Vec3& x) -> Vec3 {
    const Vec3 b = cube_to_ball(x);
    const double h = std::sqrt(std::max(0.0, 1.0 - b.x() * b.x() - b.y() * b.y()));
    double z = b.z();
    if (h > 0.0) {
      const double t = b.z() / h;
      z = h * (t + 0.5 * gamma * (1.0 - t * t));
    }
    return Vec3(2.0 * b.x(), b.y(), z);
  });
}

TetMesh stretched_ball_mesh(int resolution, double stretch, double jitter, std::uint64_t seed) {
  const TetMesh ball = uniform_ball_mesh(resolution);
  Points v = ball.vertices();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 2.0 / (5 * std::max(1, resolution));
  const Points rest = v;
  if (jitter > 0.0) {
    for (int i = 0; i < ball.num_vertices(); ++i)
      if (!ball.is_boundary(i)) v[i] += jitter * h * Vec3(u(rng), u(rng), u(rng));
    // Undo the jitter around any tet it would invert or flatten.
    for (bool changed = true; changed;) {
      changed = false;
      const auto before = tet_volumes(ball, rest);
      const auto after = tet_volumes(ball, v);
      for (int t = 0; t < ball.num_tets(); ++t)
        if (after[t] < 0.2 * before[t])
          for (int w : ball.tets()[t])
            if (v[w] != rest[w]) {
              v[w] = rest[w];
              changed = true;
            }
    }
  }
  for (auto& p : v) p = Vec3(stretch * p.x(), p.y(), p.z() / stretch);
  return TetMesh(std::move(v), ball.tets());
}

SyntheticDensity parse_synthetic_density(const std::string& name) {
  if (name == "hemisphere") return SyntheticDensity::hemisphere;
  if (name == "smooth") return SyntheticDensity::smooth;
  if (name == "regions") return SyntheticDensity::regions;
  if (name == "volume") return SyntheticDensity::volume;
  throw std::invalid_argument("unknown synthetic density: " + name);
}

std::vector<double> synthetic_population(const TetMesh& mesh, SyntheticDensity kind, std::uint64_t seed) {
  Vec3 lo = mesh.vertices().front(), hi = lo;
  for (const Vec3& p : mesh.vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::array<double, 27> block{};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (double& b : block) b = u(rng);

  const std::vector<double> vol = tet_volumes(mesh, mesh.vertices());
  std::vector<double> out(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    Vec3 c = Vec3::Zero();
    for (int v : mesh.tets()[t]) c += mesh.vertices()[v] / 4.0;
    const Vec3 s = (c - lo).cwiseQuotient(hi - lo);
    double rho = 1.0;
    switch (kind) {
      case SyntheticDensity::hemisphere:
        rho = c.x() < 0.0 ? 4.0 : 1.0;
        break;
      case SyntheticDensity::smooth:
        rho = 1.0 + 4.0 * s.x();
        break;
      case SyntheticDensity::regions: {
        int idx = 0;
        for (int a = 2; a >= 0; --a) idx = 3 * idx + std::clamp(static_cast<int>(3.0 * s[a]), 0, 2);
        rho = block[idx];
        break;
      }
      case SyntheticDensity::volume:
        break;
    }
    out[t] = rho * vol[t];
  }
  return out;
}

TetMesh u_shape_mesh(int n) {
  const int third = std::max(1, n / 3);
  return kuhn_grid(n, [=](int i, int, int k) { return !(i >= third && i < n - third && k >= third); });
}

}  // namespace volball
