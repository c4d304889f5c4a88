#include "volball/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "volball/types.hpp"

namespace volball {

LinearSystem::LinearSystem(int dimension, std::vector<Triplet> triplets, bool symmetric) : symmetric_(symmetric) {
  if (dimension < 0) throw std::out_of_range("negative dimension");
  for (const auto& t : triplets)
    if (t.row() < 0 || t.row() >= dimension || t.col() < 0 || t.col() >= dimension)
      throw std::out_of_range("triplet (" + std::to_string(t.row()) + ", " + std::to_string(t.col()) +
                              ") outside dimension " + std::to_string(dimension));
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
  });
  matrix_.resize(dimension, dimension);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  if (symmetric_) {
    const double scale = matrix_.nonZeros() ? matrix_.coeffs().cwiseAbs().maxCoeff() : 0.0;
    if (asymmetry() > 1e-12 * scale) throw std::invalid_argument("matrix flagged symmetric is not symmetric");
  }
}

double LinearSystem::asymmetry() const {
  const SpMat t = matrix_.transpose();
  const SpMat d = matrix_ - t;
  return d.nonZeros() ? d.coeffs().cwiseAbs().maxCoeff() : 0.0;
}

LinearSystem assemble(int dimension, std::vector<Triplet> triplets, bool symmetric) {
  return LinearSystem(dimension, std::move(triplets), symmetric);
}

Eigen::VectorXd pcg(const SpMat& a, const Eigen::VectorXd& b, double tolerance, int max_iterations,
                    SolveStats& stats) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  stats = SolveStats{};
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;
  Eigen::VectorXd inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  double rel = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    ap.noalias() = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      stats.iterations = it;
      stats.relative_residual = rel;
      throw SolverError("conjugate gradient breakdown (matrix not positive definite)", it, rel);
    }
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    stats.energy_history.push_back(-0.5 * x.dot(b + r));
    rel = r.norm() / bnorm;
    if (rel <= tolerance) {
      // Confirm with the true residual to guard against recurrence drift.
      const double true_rel = (b - a * x).norm() / bnorm;
      if (true_rel <= tolerance) {
        stats.iterations = it + 1;
        stats.relative_residual = true_rel;
        return x;
      }
      r = b - a * x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  stats.iterations = max_iterations;
  stats.relative_residual = (b - a * x).norm() / bnorm;
  throw SolverError("conjugate gradient did not converge", max_iterations, stats.relative_residual);
}

namespace {

Eigen::VectorXd bicgstab(const SpMat& a, const Eigen::VectorXd& b, double tolerance, int max_iterations,
                         SolveStats& stats) {
  stats = SolveStats{};
  if (b.norm() == 0.0) return Eigen::VectorXd::Zero(b.size());
  Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
  solver.setTolerance(tolerance);
  solver.setMaxIterations(max_iterations);
  solver.compute(a);
  Eigen::VectorXd x = solver.solve(b);
  stats.iterations = static_cast<int>(solver.iterations());
  stats.relative_residual = (b - a * x).norm() / b.norm();
  // The recurrence residual can undershoot the true one; restart from the iterate.
  for (int restart = 0; restart < 3 && stats.relative_residual > tolerance && solver.info() == Eigen::Success;
       ++restart) {
    x = solver.solveWithGuess(b, x);
    stats.iterations += static_cast<int>(solver.iterations());
    stats.relative_residual = (b - a * x).norm() / b.norm();
  }
  if (!(stats.relative_residual <= tolerance))
    throw SolverError("BiCGSTAB did not converge", stats.iterations, stats.relative_residual);
  return x;
}

}  // namespace

Eigen::MatrixXd solve_columns(const LinearSystem& system, const Eigen::MatrixXd& rhs, const DirichletConstraints& constraints,
                      std::vector<SolveStats>* stats) {
  const int n = system.dimension();
  const Eigen::Index k = rhs.cols();
  if (rhs.rows() != n) throw std::invalid_argument("rhs size does not match system dimension");
  const auto& cidx = constraints.indices;
  if (!cidx.empty() && (constraints.values.rows() != static_cast<Eigen::Index>(cidx.size()) ||
                        constraints.values.cols() != k))
    throw std::invalid_argument("constraint values shape mismatch");

  std::vector<int> reduced(n, 0);  // >= 0: free position; -1 - i: constraint i
  for (size_t i = 0; i < cidx.size(); ++i) {
    const int v = cidx[i];
    if (v < 0 || v >= n) throw std::out_of_range("constraint index out of range");
    if (reduced[v] < 0) throw std::invalid_argument("duplicate constraint index");
    reduced[v] = -1 - static_cast<int>(i);
  }
  int nf = 0;
  std::vector<int> free_to_full;
  for (int i = 0; i < n; ++i)
    if (reduced[i] >= 0) {
      reduced[i] = nf++;
      free_to_full.push_back(i);
    }

  Eigen::MatrixXd x(n, k);
  for (size_t i = 0; i < cidx.size(); ++i) x.row(cidx[i]) = constraints.values.row(i);
  if (stats) stats->assign(k, SolveStats{});
  if (nf == 0) return x;

  const SpMat& a = system.matrix();
  std::vector<Triplet> trips;
  trips.reserve(a.nonZeros());
  Eigen::MatrixXd b(nf, k);
  for (int f = 0; f < nf; ++f) {
    const int i = free_to_full[f];
    b.row(f) = rhs.row(i);
    for (SpMat::InnerIterator it(a, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (reduced[j] >= 0)
        trips.emplace_back(f, reduced[j], it.value());
      else
        b.row(f) -= it.value() * constraints.values.row(-1 - reduced[j]);
    }
  }
  SpMat ar(nf, nf);
  ar.setFromTriplets(trips.begin(), trips.end());
  ar.makeCompressed();

  const int max_it = 10 * nf;
  for (Eigen::Index c = 0; c < k; ++c) {
    SolveStats s;
    const Eigen::VectorXd bc = b.col(c);
    const Eigen::VectorXd xf = system.symmetric() ? pcg(ar, bc, kSolveTolerance, max_it, s)
                                                  : bicgstab(ar, bc, kSolveTolerance, max_it, s);
    for (int f = 0; f < nf; ++f) x(free_to_full[f], c) = xf[f];
    if (stats) (*stats)[c] = std::move(s);
  }
  return x;
}

Eigen::VectorXd solve(const LinearSystem& system, const Eigen::VectorXd& rhs, const DirichletConstraints& constraints,
                      SolveStats* stats) {
  std::vector<SolveStats> all;
  Eigen::MatrixXd x = solve_columns(system, Eigen::MatrixXd(rhs), constraints, stats ? &all : nullptr);
  if (stats) *stats = all.front();
  return x.col(0);
}

}  // namespace volball
