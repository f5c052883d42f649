#include "otta/spd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "otta/kernels.hpp"

namespace otta {

namespace {

constexpr double kEigenvalueFloor = 1e-12;

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(who) + ": matrix is not square");
}

void require_symmetric(const Matrix& m, const char* who, double rel_tol) {
  double scale = std::max(1e-300, m.frobenius_norm());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) {
        std::ostringstream os;
        os << who << ": not symmetric at (" << i << "," << j << "), delta "
           << std::abs(m(i, j) - m(j, i));
        throw NumericError(os.str());
      }
}

void symmetrize(Matrix& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) {
      double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
}

// Cholesky-based definiteness probe; cheaper and sharper than a full
// eigendecomposition for validation purposes.
bool is_positive_definite(const Matrix& m) {
  int n = m.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

// V * diag(f(lambda)) * V^T
Matrix assemble(const EigDecomp& eig, const std::vector<double>& f_of_lambda) {
  int n = eig.eigenvectors.rows();
  Matrix scaled(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scaled(i, j) = eig.eigenvectors(i, j) * f_of_lambda[j];
  Matrix out(n, n);
  kernels::matmul_abt(scaled.data(), eig.eigenvectors.data(), out.data(), n, n, n);
  return out;
}

std::vector<double> mapped_eigenvalues(const EigDecomp& eig, double (*fn)(double),
                                       const char* who, bool enforce_floor) {
  std::vector<double> out(eig.eigenvalues.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double lambda = eig.eigenvalues[i];
    if (enforce_floor && lambda < kEigenvalueFloor) {
      std::ostringstream os;
      os << who << ": eigenvalue " << lambda << " below floor " << kEigenvalueFloor
         << " (matrix effectively singular)";
      throw SingularMatrixError(os.str());
    }
    out[i] = fn(lambda);
  }
  return out;
}

}  // namespace

SpdMatrix SpdMatrix::from(Matrix m) {
  require_square(m, "SpdMatrix");
  if (!m.all_finite()) throw NumericError("SpdMatrix: non-finite entries");
  require_symmetric(m, "SpdMatrix", 1e-10);
  symmetrize(m);
  if (!is_positive_definite(m))
    throw SingularMatrixError("SpdMatrix: matrix is not positive definite");
  return SpdMatrix(std::move(m));
}

SpdMatrix SpdMatrix::from_trusted(Matrix m) {
  symmetrize(m);
  return SpdMatrix(std::move(m));
}

SpdMatrix covariance(const Matrix& trial, double regularization, bool center) {
  if (trial.rows() < 1 || trial.cols() < 1)
    throw DimensionError("covariance: empty trial");
  if (regularization < 0.0)
    throw NumericError("covariance: negative regularization");
  if (!trial.all_finite())
    throw NumericError("covariance: trial contains non-finite entries");
  int c = trial.rows(), t = trial.cols();
  Matrix s(c, c);
  if (center) {
    Matrix demeaned(c, t);
    for (int i = 0; i < c; ++i) {
      double mean = 0.0;
      for (int j = 0; j < t; ++j) mean += trial(i, j);
      mean /= t;
      for (int j = 0; j < t; ++j) demeaned(i, j) = trial(i, j) - mean;
    }
    kernels::xxt(demeaned.data(), s.data(), c, t);
  } else {
    kernels::xxt(trial.data(), s.data(), c, t);
  }
  for (int i = 0; i < c; ++i) s(i, i) += regularization;
  return SpdMatrix::from_trusted(std::move(s));
}

EigDecomp sym_eig(const Matrix& m) {
  require_square(m, "sym_eig");
  if (!m.all_finite()) throw NumericError("sym_eig: non-finite entries");
  require_symmetric(m, "sym_eig", 1e-8);

  const int n = m.rows();
  Matrix a = m;
  symmetrize(a);
  Matrix v = Matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  const double scale = std::max(1e-300, a.frobenius_norm());
  const int max_sweeps = 100;
  double off = off_norm();
  int sweep = 0;
  for (; sweep < max_sweeps && off > 1e-14 * scale; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        double app = a(p, p), aqq = a(q, q);
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cs = 1.0 / std::sqrt(t * t + 1.0);
        double sn = t * cs;

        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
    off = off_norm();
  }
  if (off > 1e-10 * scale) {
    std::ostringstream os;
    os << "sym_eig: Jacobi did not converge after " << max_sweeps
       << " sweeps; off-diagonal residual " << off << ", Frobenius norm " << scale;
    throw ConvergenceError(os.str(), off);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });

  EigDecomp out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
  }
  return out;
}

SpdMatrix inv_sqrt(const SpdMatrix& m) {
  EigDecomp eig = sym_eig(m.mat());
  auto f = mapped_eigenvalues(
      eig, [](double x) { return 1.0 / std::sqrt(x); }, "inv_sqrt", true);
  return SpdMatrix::from_trusted(assemble(eig, f));
}

SpdMatrix sqrt_m(const SpdMatrix& m) {
  EigDecomp eig = sym_eig(m.mat());
  auto f = mapped_eigenvalues(
      eig, [](double x) { return std::sqrt(x); }, "sqrt_m", true);
  return SpdMatrix::from_trusted(assemble(eig, f));
}

Matrix log_m(const SpdMatrix& m) {
  EigDecomp eig = sym_eig(m.mat());
  auto f = mapped_eigenvalues(
      eig, [](double x) { return std::log(x); }, "log_m", true);
  Matrix out = assemble(eig, f);
  symmetrize(out);
  return out;
}

SpdMatrix exp_m(const Matrix& s) {
  EigDecomp eig = sym_eig(s);
  auto f = mapped_eigenvalues(
      eig, [](double x) { return std::exp(x); }, "exp_m", false);
  return SpdMatrix::from_trusted(assemble(eig, f));
}

namespace {

void check_mean_inputs(const std::vector<SpdMatrix>& mats,
                       const std::vector<double>& weights, const char* who) {
  if (mats.empty()) throw DimensionError(std::string(who) + ": no matrices");
  if (mats.size() != weights.size())
    throw DimensionError(std::string(who) + ": weight count mismatch");
  int dim = mats.front().dim();
  for (const auto& m : mats)
    if (m.dim() != dim) throw DimensionError(std::string(who) + ": dim mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw NumericError(std::string(who) + ": negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << who << ": weights sum to " << sum << ", expected 1";
    throw NumericError(os.str());
  }
}

}  // namespace

SpdMatrix arithmetic_mean(const std::vector<SpdMatrix>& mats,
                          const std::vector<double>& weights) {
  check_mean_inputs(mats, weights, "arithmetic_mean");
  int n = mats.front().dim();
  Matrix acc(n, n);
  for (size_t i = 0; i < mats.size(); ++i) {
    const Matrix& m = mats[i].mat();
    double w = weights[i];
    for (size_t k = 0; k < acc.size(); ++k) acc.data()[k] += w * m.data()[k];
  }
  return SpdMatrix::from_trusted(std::move(acc));
}

SpdMatrix geometric_mean(const std::vector<SpdMatrix>& mats,
                         const std::vector<double>& weights,
                         double tol, int max_iter, const SpdMatrix* init) {
  check_mean_inputs(mats, weights, "geometric_mean");
  if (tol <= 0.0) throw NumericError("geometric_mean: tol must be positive");
  if (mats.size() == 1) return mats.front();

  const int n = mats.front().dim();
  SpdMatrix g = init ? *init : arithmetic_mean(mats, weights);

  double residual = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    SpdMatrix g_isqrt = inv_sqrt(g);
    SpdMatrix g_sqrt = sqrt_m(g);

    // tangent-space mean: sum_i w_i log(G^{-1/2} M_i G^{-1/2})
    Matrix tangent(n, n);
    Matrix tmp(n, n), congruent(n, n);
    for (size_t i = 0; i < mats.size(); ++i) {
      kernels::matmul(g_isqrt.mat().data(), mats[i].mat().data(), tmp.data(), n, n, n);
      kernels::matmul(tmp.data(), g_isqrt.mat().data(), congruent.data(), n, n, n);
      Matrix lg = log_m(SpdMatrix::from_trusted(congruent));
      for (size_t k = 0; k < tangent.size(); ++k)
        tangent.data()[k] += weights[i] * lg.data()[k];
    }

    residual = tangent.frobenius_norm();
    if (residual <= tol) return g;

    // G <- G^{1/2} exp(tangent) G^{1/2}
    SpdMatrix step = exp_m(tangent);
    kernels::matmul(g_sqrt.mat().data(), step.mat().data(), tmp.data(), n, n, n);
    Matrix next(n, n);
    kernels::matmul(tmp.data(), g_sqrt.mat().data(), next.data(), n, n, n);
    g = SpdMatrix::from_trusted(std::move(next));
  }

  std::ostringstream os;
  os << "geometric_mean: no convergence after " << max_iter
     << " iterations, residual " << residual << " (tol " << tol << ")";
  throw ConvergenceError(os.str(), residual);
}

}  // namespace otta
