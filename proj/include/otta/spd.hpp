#pragma once

#include <vector>

#include "otta/matrix.hpp"

namespace otta {

/// Symmetric positive-definite matrix. Construction validates symmetry
/// (1e-10 relative) and positive definiteness; use SpdMatrix::from with a
/// regularization ridge when the input may be rank-deficient.
class SpdMatrix {
 public:
  /// Validates and wraps `m`. Throws DimensionError / NumericError /
  /// SingularMatrixError when the invariants fail.
  static SpdMatrix from(Matrix m);

  /// `m` is trusted to be SPD (internal fast path for results of SPD-closed
  /// operations); only symmetrizes roundoff.
  static SpdMatrix from_trusted(Matrix m);

  static SpdMatrix identity(int n) { return from_trusted(Matrix::identity(n)); }

  int dim() const { return mat_.rows(); }
  const Matrix& mat() const { return mat_; }
  double operator()(int r, int c) const { return mat_(r, c); }

 private:
  explicit SpdMatrix(Matrix m) : mat_(std::move(m)) {}
  Matrix mat_;
};

struct EigDecomp {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // orthonormal columns, matching order
};

/// Unnormalized covariance X X^T + regularization * I of a C x T trial.
/// No 1/T factor: the whitening in the alignment step is invariant to any
/// constant scaling shared by all trials. `center` subtracts each channel's
/// mean first (off by default).
SpdMatrix covariance(const Matrix& trial, double regularization, bool center = false);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues
/// ascending. Throws ConvergenceError after the sweep cap (pathological
/// input), carrying the remaining off-diagonal residual.
EigDecomp sym_eig(const Matrix& m);
inline EigDecomp sym_eig(const SpdMatrix& m) { return sym_eig(m.mat()); }

/// R^{-1/2}: satisfies result * m * result = I. Throws SingularMatrixError
/// when an eigenvalue falls below the 1e-12 floor.
SpdMatrix inv_sqrt(const SpdMatrix& m);

/// Matrix square root via eigendecomposition.
SpdMatrix sqrt_m(const SpdMatrix& m);

/// Matrix logarithm of an SPD matrix (result is symmetric, not SPD).
Matrix log_m(const SpdMatrix& m);

/// Matrix exponential of a symmetric matrix (result is SPD).
SpdMatrix exp_m(const Matrix& s);

/// Weighted arithmetic mean; weights must be nonnegative and sum to 1
/// within 1e-9.
SpdMatrix arithmetic_mean(const std::vector<SpdMatrix>& mats,
                          const std::vector<double>& weights);

/// Weighted geometric (Karcher) mean: the fixed point G with
/// sum_i w_i log(G^{-1/2} M_i G^{-1/2}) = 0. Fixed-point iteration with unit
/// step, initialized at `init` (arithmetic mean when absent). Throws
/// ConvergenceError with the final residual when max_iter is exhausted.
SpdMatrix geometric_mean(const std::vector<SpdMatrix>& mats,
                         const std::vector<double>& weights,
                         double tol = 1e-8, int max_iter = 50,
                         const SpdMatrix* init = nullptr);

}  // namespace otta
