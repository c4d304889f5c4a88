#include "volball/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/LU>

#include "volball/sparse.hpp"
#include "volball/stats.hpp"

namespace volball {

namespace {

using Vec2 = Eigen::Vector2d;

constexpr double kPoleCutoff = 0.9;
constexpr double kMuBound = 0.99;

double face_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

Vec3 area_centroid(const SurfaceMesh& s, std::span<const Vec3> x) {
  Vec3 c = Vec3::Zero();
  double total = 0.0;
  for (const auto& f : s.faces) {
    const double a = face_area(x[f[0]], x[f[1]], x[f[2]]);
    c += a * (x[f[0]] + x[f[1]] + x[f[2]]) / 3.0;
    total += a;
  }
  return c / total;
}

// Orientation-preserving stereographic charts: positive sphere triangles map to
// counter-clockwise plane triangles in both.
Vec2 project(const Vec3& p, bool north) {
  return north ? Vec2(p.x(), -p.y()) / (1.0 - p.z()) : Vec2(p.x(), p.y()) / (1.0 + p.z());
}

Vec3 unproject(const Vec2& q, bool north) {
  const double r2 = q.squaredNorm();
  const double s = 1.0 + r2;
  if (north) return Vec3(2.0 * q.x() / s, -2.0 * q.y() / s, (r2 - 1.0) / s);
  return Vec3(2.0 * q.x() / s, 2.0 * q.y() / s, (1.0 - r2) / s);
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool face_flipped(const SurfaceMesh& s, std::span<const Vec3> x, int f) {
  const Tri& t = s.faces[f];
  return !(sphere_orientation(x[t[0]], x[t[1]], x[t[2]]) > 0.0);
}

// One stereographic Beltrami pass. Returns true if any vertex moved.
bool beltrami_pass(const SurfaceMesh& s, std::span<const Vec3> ref, Points& cur, bool north) {
  const int nv = s.num_vertices();
  const double sgn = north ? 1.0 : -1.0;
  std::vector<Vec2> pr(nv), pc(nv);
  for (int i = 0; i < nv; ++i) {
    pr[i] = project(ref[i], north);
    pc[i] = project(cur[i], north);
  }
  const int nf = static_cast<int>(s.faces.size());
  std::vector<char> in_region(nf, 0);
  for (int f = 0; f < nf; ++f) {
    const Tri& t = s.faces[f];
    bool ok = true;
    for (int v : t) ok = ok && sgn * ref[v].z() < kPoleCutoff && sgn * cur[v].z() < kPoleCutoff;
    if (ok) ok = cross2(pr[t[1]] - pr[t[0]], pr[t[2]] - pr[t[0]]) > 0.0;
    in_region[f] = ok;
  }
  std::vector<char> touched(nv, 0), fixed(nv, 0);
  for (int f = 0; f < nf; ++f)
    for (int v : s.faces[f]) (in_region[f] ? touched[v] : fixed[v]) = 1;
  bool any_flip = false, any_free = false, any_fixed = false;
  for (int f = 0; f < nf; ++f)
    if (in_region[f] && face_flipped(s, cur, f)) any_flip = true;
  for (int v = 0; v < nv; ++v)
    if (touched[v]) (fixed[v] ? any_fixed : any_free) = true;
  if (!any_flip || !any_free || !any_fixed) return false;

  std::vector<int> local(nv, -1);
  int n = 0;
  for (int v = 0; v < nv; ++v)
    if (touched[v]) local[v] = n++;
  std::vector<Triplet> trips;
  for (int f = 0; f < nf; ++f) {
    if (!in_region[f]) continue;
    const Tri& t = s.faces[f];
    const std::complex<double> mu0 =
        beltrami_coefficient(pr[t[0]], pr[t[1]], pr[t[2]], pc[t[0]], pc[t[1]], pc[t[2]]);
    std::complex<double> mu = mu0;
    if (std::abs(mu) > kMuBound) mu *= kMuBound / std::abs(mu);
    const Eigen::Matrix2d a = beltrami_matrix(mu);
    Eigen::Matrix2d p;
    p.col(0) = pr[t[1]] - pr[t[0]];
    p.col(1) = pr[t[2]] - pr[t[0]];
    const double area = 0.5 * p.determinant();
    const Eigen::Matrix2d pinv = p.inverse();
    Eigen::Matrix<double, 2, 3> g;
    g.col(1) = pinv.row(0).transpose();
    g.col(2) = pinv.row(1).transpose();
    g.col(0) = -g.col(1) - g.col(2);
    const Eigen::Matrix3d k = area * g.transpose() * a * g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(local[t[i]], local[t[j]], k(i, j));
  }
  // Symmetrize exactly so the SPD path applies.
  const size_t m = trips.size();
  for (size_t i = 0; i < m; ++i) trips[i] = Triplet(trips[i].row(), trips[i].col(), 0.5 * trips[i].value());
  for (size_t i = 0; i < m; ++i) trips.emplace_back(trips[i].col(), trips[i].row(), trips[i].value());
  const LinearSystem sys(n, std::move(trips));

  DirichletConstraints c;
  for (int v = 0; v < nv; ++v)
    if (touched[v] && fixed[v]) c.indices.push_back(local[v]);
  c.values.resize(c.indices.size(), 2);
  {
    size_t i = 0;
    for (int v = 0; v < nv; ++v)
      if (touched[v] && fixed[v]) c.values.row(i++) = pc[v].transpose();
  }
  Eigen::MatrixXd uv;
  try {
    uv = solve_columns(sys, Eigen::MatrixXd::Zero(n, 2), c);
  } catch (const SolverError&) {
    return false;
  }
  Points next = cur;
  for (int v = 0; v < nv; ++v)
    if (touched[v] && !fixed[v]) next[v] = unproject(Vec2(uv(local[v], 0), uv(local[v], 1)), north).normalized();
  if (count_sphere_flips(s, next) >= count_sphere_flips(s, cur)) return false;
  cur = std::move(next);
  return true;
}

}  // namespace

SurfaceMesh boundary_surface(const TetMesh& mesh) {
  SurfaceMesh s;
  s.volume_index = mesh.boundary_vertices();
  std::vector<int> local(mesh.num_vertices(), -1);
  for (size_t i = 0; i < s.volume_index.size(); ++i) local[s.volume_index[i]] = static_cast<int>(i);
  s.faces.reserve(mesh.boundary_faces().size());
  for (const auto& f : mesh.boundary_faces()) s.faces.push_back({local[f[0]], local[f[1]], local[f[2]]});
  const int nv = s.num_vertices();
  s.vertex_faces.assign(nv, {});
  s.neighbors.assign(nv, {});
  for (int f = 0; f < static_cast<int>(s.faces.size()); ++f)
    for (int k = 0; k < 3; ++k) {
      const int v = s.faces[f][k];
      s.vertex_faces[v].push_back(f);
      s.neighbors[v].push_back(s.faces[f][(k + 1) % 3]);
      s.neighbors[v].push_back(s.faces[f][(k + 2) % 3]);
    }
  for (auto& nb : s.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return s;
}

Points gather(const SurfaceMesh& surface, std::span<const Vec3> volume_positions) {
  Points x(surface.num_vertices());
  for (int i = 0; i < surface.num_vertices(); ++i) x[i] = volume_positions[surface.volume_index[i]];
  return x;
}

int count_sphere_flips(const SurfaceMesh& surface, std::span<const Vec3> x) {
  int n = 0;
  for (int f = 0; f < static_cast<int>(surface.faces.size()); ++f) n += face_flipped(surface, x, f);
  return n;
}

std::vector<double> triangle_areas(const SurfaceMesh& surface, std::span<const Vec3> x) {
  std::vector<double> a(surface.faces.size());
  for (size_t f = 0; f < a.size(); ++f) {
    const Tri& t = surface.faces[f];
    a[f] = face_area(x[t[0]], x[t[1]], x[t[2]]);
  }
  return a;
}

std::vector<std::vector<double>> surface_cotangent_weights(const SurfaceMesh& surface, std::span<const Vec3> x) {
  std::vector<std::vector<double>> w(surface.num_vertices());
  for (int v = 0; v < surface.num_vertices(); ++v) w[v].assign(surface.neighbors[v].size(), 0.0);
  auto add = [&](int i, int j, double val) {
    const auto& nb = surface.neighbors[i];
    w[i][std::lower_bound(nb.begin(), nb.end(), j) - nb.begin()] += val;
  };
  for (const auto& t : surface.faces)
    for (int k = 0; k < 3; ++k) {
      const int o = t[k], i = t[(k + 1) % 3], j = t[(k + 2) % 3];
      const Vec3 u = x[i] - x[o], v = x[j] - x[o];
      const double cr = u.cross(v).norm();
      const double cot = cr > 0.0 ? u.dot(v) / cr : 0.0;
      add(i, j, 0.5 * cot);
      add(j, i, 0.5 * cot);
    }
  return w;
}

Vec3 mobius(const Vec3& x, const Vec3& c) {
  const double c2 = c.squaredNorm();
  const Vec3 d = x - c;
  return ((1.0 - c2) * d - d.squaredNorm() * c) / (1.0 - 2.0 * x.dot(c) + c2 * x.squaredNorm());
}

double mobius_center(const SurfaceMesh& surface, Points& x, int max_iterations) {
  Vec3 c = area_centroid(surface, x);
  const int flips0 = count_sphere_flips(surface, x);
  for (int it = 0; it < max_iterations && c.norm() > 1e-12; ++it) {
    double step = 1.0;
    bool accepted = false;
    for (int tries = 0; tries < 20 && !accepted; ++tries, step *= 0.5) {
      Points y(x.size());
      const Vec3 cc = step * c;
      for (size_t i = 0; i < x.size(); ++i) y[i] = mobius(x[i], cc).normalized();
      const Vec3 cn = area_centroid(surface, y);
      if (cn.norm() < c.norm() && count_sphere_flips(surface, y) <= flips0) {
        x = std::move(y);
        c = cn;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  return c.norm();
}

Points radial_sphere_map(const SurfaceMesh& surface, std::span<const Vec3> x) {
  const Vec3 c = area_centroid(surface, x);
  Points y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - c).normalized();
  return y;
}

Points tutte_sphere_map(const SurfaceMesh& surface) {
  const int nv = surface.num_vertices();
  const Tri outer = surface.faces.front();
  std::vector<Triplet> trips;
  for (int v = 0; v < nv; ++v)
    for (int w : surface.neighbors[v]) {
      trips.emplace_back(v, v, 1.0);
      trips.emplace_back(v, w, -1.0);
    }
  const LinearSystem sys(nv, std::move(trips));
  DirichletConstraints c{{outer[0], outer[1], outer[2]}, Eigen::MatrixXd(3, 2)};
  for (int k = 0; k < 3; ++k) {
    const double ang = 2.0 * M_PI * k / 3.0;
    c.values.row(k) << std::cos(ang), std::sin(ang);
  }
  const Eigen::MatrixXd uv = solve_columns(sys, Eigen::MatrixXd::Zero(nv, 2), c);

  std::vector<double> radii(nv);
  for (int v = 0; v < nv; ++v) radii[v] = uv.row(v).norm();
  std::nth_element(radii.begin(), radii.begin() + nv / 2, radii.end());
  const double scale = radii[nv / 2] > 0.0 ? 1.0 / radii[nv / 2] : 1.0;
  Points x(nv);
  for (int v = 0; v < nv; ++v) {
    const Vec2 q = scale * Vec2(uv(v, 0), uv(v, 1));
    const double r2 = q.squaredNorm();
    x[v] = Vec3(2.0 * q.x(), 2.0 * q.y(), r2 - 1.0) / (1.0 + r2);
  }
  if (2 * count_sphere_flips(surface, x) > static_cast<int>(surface.faces.size()))
    for (auto& p : x) p.x() = -p.x();
  return x;
}

int relax_conformal(const SurfaceMesh& surface, std::span<const Vec3> rest, Points& x, int max_sweeps,
                    double tolerance) {
  auto w = surface_cotangent_weights(surface, rest);
  double wmean = 0.0;
  size_t count = 0;
  for (const auto& row : w)
    for (double v : row) {
      wmean += std::abs(v);
      ++count;
    }
  wmean /= std::max<size_t>(1, count);
  for (auto& row : w)
    for (double& v : row) v = std::max(v, 1e-3 * wmean);

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int v = 0; v < surface.num_vertices(); ++v) {
      Vec3 s = Vec3::Zero();
      double ws = 0.0;
      const auto& nb = surface.neighbors[v];
      for (size_t k = 0; k < nb.size(); ++k) {
        s += w[v][k] * x[nb[k]];
        ws += w[v][k];
      }
      const Vec3 target = s.normalized();
      if (!target.allFinite()) continue;
      const Vec3 old = x[v];
      x[v] = target;
      bool ok = true;
      for (int f : surface.vertex_faces[v]) ok = ok && !face_flipped(surface, x, f);
      if (!ok) {
        x[v] = old;
        continue;
      }
      moved = std::max(moved, (target - old).norm());
    }
    mobius_center(surface, x, 10);
    if (moved < tolerance) {
      ++sweep;
      break;
    }
  }
  return sweep;
}

std::complex<double> beltrami_coefficient(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& q0,
                                          const Vec2& q1, const Vec2& q2) {
  Eigen::Matrix2d p, q;
  p << p1 - p0, p2 - p0;
  q << q1 - q0, q2 - q0;
  const Eigen::Matrix2d j = q * p.inverse();
  const std::complex<double> fz(0.5 * (j(0, 0) + j(1, 1)), 0.5 * (j(1, 0) - j(0, 1)));
  const std::complex<double> fzb(0.5 * (j(0, 0) - j(1, 1)), 0.5 * (j(1, 0) + j(0, 1)));
  if (std::abs(fz) < 1e-300) return {0.0, 0.0};
  return fzb / fz;
}

Eigen::Matrix2d beltrami_matrix(std::complex<double> mu) {
  const double rho = mu.real(), tau = mu.imag();
  const double d = 1.0 - std::norm(mu);
  Eigen::Matrix2d a;
  a << ((rho - 1) * (rho - 1) + tau * tau) / d, -2.0 * tau / d, -2.0 * tau / d,
      ((1 + rho) * (1 + rho) + tau * tau) / d;
  return a;
}

SphereCorrectionStats correct_sphere_flips(const SurfaceMesh& surface, std::span<const Vec3> reference,
                                           Points& current, int max_rounds) {
  SphereCorrectionStats st;
  for (auto& p : current) p.normalize();
  st.initial_flips = count_sphere_flips(surface, current);
  for (int round = 0; round < max_rounds && count_sphere_flips(surface, current) > 0; ++round) {
    bool progress = false;
    for (bool north : {true, false})
      if (count_sphere_flips(surface, current) > 0 && beltrami_pass(surface, reference, current, north)) {
        ++st.passes;
        progress = true;
      }
    if (!progress) break;
  }
  std::vector<char> reverted(surface.num_vertices(), 0);
  while (count_sphere_flips(surface, current) > 0) {
    for (int f = 0; f < static_cast<int>(surface.faces.size()); ++f)
      if (face_flipped(surface, current, f))
        for (int v : surface.faces[f]) {
          current[v] = reference[v];
          reverted[v] = 1;
        }
  }
  st.rolled_back_vertices = static_cast<int>(std::count(reverted.begin(), reverted.end(), 1));
  return st;
}

double face_density_cv(const SurfaceMesh& surface, std::span<const double> face_population, std::span<const Vec3> x) {
  const auto a = triangle_areas(surface, x);
  std::vector<double> rho(a.size());
  for (size_t f = 0; f < a.size(); ++f) rho[f] = face_population[f] / a[f];
  return coefficient_of_variation(rho);
}

std::vector<double> surface_vertex_density(const SurfaceMesh& surface, std::span<const double> face_population,
                                           std::span<const Vec3> x) {
  const auto area = triangle_areas(surface, x);
  std::vector<double> pop(surface.num_vertices(), 0.0), lumped(surface.num_vertices(), 0.0);
  for (size_t f = 0; f < area.size(); ++f)
    for (int v : surface.faces[f]) {
      lumped[v] += area[f] / 3.0;
      pop[v] += face_population[f] / 3.0;
    }
  for (size_t v = 0; v < pop.size(); ++v) pop[v] /= lumped[v];
  return pop;
}

SphereDemStats sphere_density_equalize(const SurfaceMesh& surface, std::span<const double> face_population, Points& x,
                                       double dt, double tolerance, int max_iterations) {
  SphereDemStats st;
  const int nv = surface.num_vertices();
  const int nf = static_cast<int>(surface.faces.size());
  st.initial_cv = st.final_cv = coefficient_of_variation(surface_vertex_density(surface, face_population, x));
  for (int it = 0; it < max_iterations && st.final_cv >= tolerance; ++it) {
    const auto area = triangle_areas(surface, x);
    const auto rho = surface_vertex_density(surface, face_population, x);
    std::vector<double> lumped(nv, 0.0);
    for (int f = 0; f < nf; ++f)
      for (int v : surface.faces[f]) lumped[v] += area[f] / 3.0;

    const auto w = surface_cotangent_weights(surface, x);
    std::vector<Triplet> trips;
    Eigen::VectorXd rhs(nv);
    for (int v = 0; v < nv; ++v) {
      double diag = lumped[v];
      for (size_t k = 0; k < surface.neighbors[v].size(); ++k) {
        trips.emplace_back(v, surface.neighbors[v][k], -dt * w[v][k]);
        diag += dt * w[v][k];
      }
      trips.emplace_back(v, v, diag);
      rhs[v] = lumped[v] * rho[v];
    }
    const Eigen::VectorXd rho_next = solve(LinearSystem(nv, std::move(trips)), rhs);

    std::vector<Vec3> grad(nv, Vec3::Zero());
    std::vector<double> gw(nv, 0.0);
    for (int f = 0; f < nf; ++f) {
      const Tri& t = surface.faces[f];
      const Vec3 n2 = (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]);
      const double a2 = n2.squaredNorm();
      if (a2 <= 0.0) continue;
      Vec3 g = Vec3::Zero();
      for (int k = 0; k < 3; ++k) g += rho_next[t[k]] * n2.cross(x[t[(k + 2) % 3]] - x[t[(k + 1) % 3]]) / a2;
      for (int v : t) {
        grad[v] += area[f] * g;
        gw[v] += area[f];
      }
    }
    Points next(nv);
    for (int v = 0; v < nv; ++v) {
      Vec3 vel = -(grad[v] / gw[v]) / rho_next[v];
      vel -= vel.dot(x[v]) * x[v];
      next[v] = (x[v] + dt * vel).normalized();
    }
    const auto corr = correct_sphere_flips(surface, x, next);
    if (corr.initial_flips > 0) ++st.corrected_iterations;
    x = std::move(next);
    st.iterations = it + 1;
    st.final_cv = coefficient_of_variation(surface_vertex_density(surface, face_population, x));
  }
  return st;
}

}  // namespace volball
