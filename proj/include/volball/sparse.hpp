#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace volball {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// Fixed values for a subset of unknowns: values(i, k) is the value of
/// unknown indices[i] in right-hand side column k.
struct DirichletConstraints {
  std::vector<int> indices;
  Eigen::MatrixXd values;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  /// Quadratic energy 0.5 x'Ax - b'x of the reduced system after each CG iteration.
  std::vector<double> energy_history;
};

/// Square sparse operator with deterministic assembly.
class LinearSystem {
 public:
  /// Duplicates are summed after sorting by (row, col). Throws std::out_of_range
  /// for indices outside [0, dimension). A symmetric system must satisfy
  /// max|A - A'| <= 1e-12 max|A| (std::invalid_argument otherwise).
  LinearSystem(int dimension, std::vector<Triplet> triplets, bool symmetric = true);

  int dimension() const { return static_cast<int>(matrix_.rows()); }
  bool symmetric() const { return symmetric_; }
  const SpMat& matrix() const { return matrix_; }

  /// max |A - A'|.
  double asymmetry() const;

 private:
  SpMat matrix_;
  bool symmetric_;
};

LinearSystem assemble(int dimension, std::vector<Triplet> triplets, bool symmetric = true);

inline constexpr double kSolveTolerance = 1e-10;

/// Solve A x = b column by column with constrained unknowns eliminated.
/// Symmetric systems use Jacobi-preconditioned CG, others BiCGSTAB; both capped
/// at 10 n iterations. Throws SolverError when the tolerance is not reached.
Eigen::MatrixXd solve_columns(const LinearSystem& system, const Eigen::MatrixXd& rhs,
                      const DirichletConstraints& constraints = {}, std::vector<SolveStats>* stats = nullptr);

Eigen::VectorXd solve(const LinearSystem& system, const Eigen::VectorXd& rhs,
                      const DirichletConstraints& constraints = {}, SolveStats* stats = nullptr);

/// Jacobi-preconditioned conjugate gradients on an SPD matrix.
Eigen::VectorXd pcg(const SpMat& a, const Eigen::VectorXd& b, double tolerance, int max_iterations,
                    SolveStats& stats);

}  // namespace volball
