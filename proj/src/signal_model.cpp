#include "deconv/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "deconv/errors.hpp"
#include "deconv/kernels.hpp"

namespace deconv {

void TimeSeries::validate() const {
  if (values.size() < 2) throw InvalidParameterError("time series needs at least 2 samples");
  if (!(tr > 0.0)) throw InvalidParameterError("sampling period must be positive");
  if (!values.allFinite()) throw InvalidParameterError("time series contains non-finite values");
}

SparseSignal SparseSignal::from_values(VectorXd v) {
  SparseSignal s;
  s.values = std::move(v);
  for (Index j = 0; j < s.values.size(); ++j)
    if (s.values[j] != 0.0) s.support.push_back(j);
  return s;
}

void HrfKernel::validate() const {
  if (coefficients.size() == 0) throw InvalidParameterError("empty kernel");
  if (!coefficients.allFinite()) throw InvalidParameterError("kernel has non-finite coefficients");
  if (coefficients.cwiseAbs().maxCoeff() == 0.0) throw InvalidParameterError("all-zero kernel");
  if (!(tr > 0.0)) throw InvalidParameterError("kernel tr must be positive");
}

ConvolutionOperator::ConvolutionOperator(HrfKernel kernel, Index n)
    : kernel_(std::move(kernel)), n_(n) {
  kernel_.validate();
  if (kernel_.length() >= n_)
    throw InvalidParameterError("kernel length must be smaller than the series length");
}

VectorXd ConvolutionOperator::apply(const VectorXd& x) const {
  if (x.size() != n_) throw InvalidParameterError("convolution operator: dimension mismatch");
  VectorXd out;
  kernels::conv_forward(kernel_.coefficients, x, out);
  return out;
}

VectorXd ConvolutionOperator::apply_adjoint(const VectorXd& r) const {
  if (r.size() != n_) throw InvalidParameterError("convolution operator: dimension mismatch");
  VectorXd out;
  kernels::conv_adjoint(kernel_.coefficients, r, out);
  return out;
}

VectorXd ConvolutionOperator::column(Index j) const {
  VectorXd col = VectorXd::Zero(n_);
  const Index nh = kernel_.length();
  const Index top = std::min(n_, j + nh);
  for (Index t = j; t < top; ++t) col[t] = kernel_.coefficients[t - j];
  return col;
}

double ConvolutionOperator::gram(Index i, Index j) const {
  const Index nh = kernel_.length();
  const Index lo = std::max(i, j);
  const Index hi = std::min({n_, i + nh, j + nh});
  double acc = 0.0;
  for (Index t = lo; t < hi; ++t)
    acc += kernel_.coefficients[t - i] * kernel_.coefficients[t - j];
  return acc;
}

MatrixXd ConvolutionOperator::dense() const {
  MatrixXd m = MatrixXd::Zero(n_, n_);
  for (Index j = 0; j < n_; ++j) m.col(j) = column(j);
  return m;
}

MatrixXd LinearDesign::dense() const {
  MatrixXd m(size(), size());
  for (Index j = 0; j < size(); ++j) m.col(j) = column(j);
  return m;
}

DenseDesign::DenseDesign(MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw InvalidParameterError("design matrix must be square");
}

double double_gamma(double t) {
  if (t <= 0.0) return 0.0;
  // gamma(shape a, unit scale) density: t^(a-1) e^-t / Gamma(a)
  auto gamma_pdf = [](double x, double a) {
    return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
  };
  return gamma_pdf(t, 6.0) - gamma_pdf(t, 16.0) / 6.0;
}

HrfKernel canonical_hrf(double tr, int onset_shift, double duration) {
  if (!(tr > 0.0)) throw InvalidParameterError("canonical_hrf: tr must be positive");
  if (!(duration >= tr)) throw InvalidParameterError("canonical_hrf: duration must be >= tr");
  if (onset_shift < 0) throw InvalidParameterError("canonical_hrf: onset shift must be >= 0");

  const Index samples = static_cast<Index>(std::floor(duration / tr)) + 1;
  VectorXd h = VectorXd::Zero(samples + onset_shift);
  for (Index i = 0; i < samples; ++i)
    h[i + onset_shift] = double_gamma(static_cast<double>(i) * tr);

  const double mass = h.cwiseAbs().sum();
  if (mass == 0.0) throw InvalidParameterError("canonical_hrf: degenerate sampling grid");
  h /= mass;

  HrfKernel kernel{std::move(h), tr, onset_shift};
  kernel.validate();
  return kernel;
}

ConvolutionOperator toeplitz(const HrfKernel& h, Index n) { return {h, n}; }

TimeSeries convolve(const SparseSignal& s, const HrfKernel& h) {
  h.validate();
  if (h.length() >= s.length())
    throw InvalidParameterError("convolve: kernel length must be smaller than the signal");
  VectorXd out;
  kernels::conv_forward(h.coefficients, s.values, out);
  return {std::move(out), h.tr};
}

SparseSignal generate_sparse_signal(Index n, Index k, Rng& rng) {
  if (n < 1 || k < 1 || k > n)
    throw InvalidParameterError("generate_sparse_signal: need 1 <= k <= n");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // partial Fisher-Yates: the first k entries end up as the sample
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  SparseSignal s;
  s.support.assign(idx.begin(), idx.begin() + k);
  std::sort(s.support.begin(), s.support.end());
  s.values = VectorXd::Zero(n);
  for (Index j : s.support) s.values[j] = 1.0;
  return s;
}

double sample_std(const VectorXd& v) {
  const Index n = v.size();
  if (n < 2) throw InvalidParameterError("sample_std: need at least 2 samples");
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

TimeSeries add_noise_at_snr(const TimeSeries& clean, double snr, Rng& rng) {
  clean.validate();
  if (!(snr > 0.0)) throw InvalidParameterError("add_noise_at_snr: snr must be positive");
  const double sd = sample_std(clean.values);
  if (sd == 0.0) throw DegenerateInputError("add_noise_at_snr: constant series");
  const double sigma = sd / snr;
  TimeSeries noisy = clean;
  for (Index i = 0; i < noisy.values.size(); ++i) noisy.values[i] += sigma * rng.gaussian();
  return noisy;
}

TruncatedSvdSolver::TruncatedSvdSolver(const LinearDesign& design, double rel_threshold) {
  Eigen::BDCSVD<MatrixXd> svd(design.dense(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = rel_threshold * (sv.size() > 0 ? sv[0] : 0.0);
  rank_ = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank_;
  u_ = svd.matrixU().leftCols(rank_);
  v_ = svd.matrixV().leftCols(rank_);
  inv_singular_ = sv.head(rank_).cwiseInverse();
}

VectorXd TruncatedSvdSolver::solve(const VectorXd& y) const {
  return v_ * (inv_singular_.asDiagonal() * (u_.transpose() * y));
}

VectorXd ols_estimate(const TimeSeries& y, const ConvolutionOperator& op) {
  y.validate();
  if (y.length() != op.size()) throw InvalidParameterError("ols_estimate: dimension mismatch");
  return TruncatedSvdSolver(op).solve(y.values);
}

}  // namespace deconv
