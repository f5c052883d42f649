#include "otta/alignment.hpp"

#include "otta/kernels.hpp"

namespace otta {

AlignmentState::AlignmentState(AlignmentMethod method, double cov_ridge_rel,
                               bool center)
    : method_(method), cov_ridge_rel_(cov_ridge_rel), center_(center) {
  if (cov_ridge_rel < 0.0)
    throw NumericError("AlignmentState: negative covariance ridge");
}

SpdMatrix AlignmentState::regularized_covariance(const Matrix& trial) const {
  // ridge relative to the mean eigenvalue scale, trace/C
  int c = trial.rows();
  SpdMatrix raw = covariance(trial, 0.0, center_);
  double ridge = cov_ridge_rel_ * raw.mat().trace() / c;
  Matrix m = raw.mat();
  for (int i = 0; i < c; ++i) m(i, i) += ridge;
  return SpdMatrix::from_trusted(std::move(m));
}

void AlignmentState::update_reference(const RingBuffer& buf) {
  if (method_ == AlignmentMethod::none) return;
  if (buf.empty()) throw DimensionError("update_reference: buffer empty");

  // drop cache entries for evicted trials
  uint64_t oldest = buf.at(0).trial_id;
  covariance_cache_.erase(covariance_cache_.begin(),
                          covariance_cache_.lower_bound(oldest));

  std::vector<SpdMatrix> covs;
  covs.reserve(buf.size());
  for (int i = 0; i < buf.size(); ++i) {
    const Trial& t = buf.at(i);
    auto it = covariance_cache_.find(t.trial_id);
    if (it == covariance_cache_.end())
      it = covariance_cache_.emplace(t.trial_id, regularized_covariance(t.data)).first;
    covs.push_back(it->second);
  }

  std::vector<double> w = buf.weights();
  SpdMatrix ea = arithmetic_mean(covs, w);
  if (method_ == AlignmentMethod::ea) {
    reference_ = ea;
  } else {
    reference_ = geometric_mean(covs, w, karcher_tol_, karcher_max_iter_, &ea);
  }
  whitener_ = inv_sqrt(*reference_).mat();
}

Trial AlignmentState::align(const Trial& trial) const {
  if (method_ == AlignmentMethod::none) return trial;
  if (!whitener_)
    throw NumericError("align: no reference yet (call update_reference)");
  int c = trial.data.rows(), t = trial.data.cols();
  if (whitener_->rows() != c)
    throw DimensionError("align: trial channel count does not match reference");
  Trial out;
  out.data = Matrix(c, t);
  kernels::matmul(whitener_->data(), trial.data.data(), out.data.data(), c, c, t);
  out.label = trial.label;
  out.trial_id = trial.trial_id;
  return out;
}

}  // namespace otta
