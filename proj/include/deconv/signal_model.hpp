#pragma once

#include <vector>

#include <Eigen/Core>

#include "deconv/design.hpp"
#include "deconv/rng.hpp"

namespace deconv {

// Uniformly sampled real-valued signal; tr is the sampling period in seconds.
struct TimeSeries {
  VectorXd values;
  double tr = 1.0;

  Index length() const { return values.size(); }
  void validate() const;  // length >= 2, finite values, tr > 0
};

// Sparse event train. The support is kept sorted and always matches the
// nonzero positions of values exactly.
struct SparseSignal {
  VectorXd values;
  std::vector<Index> support;

  static SparseSignal from_values(VectorXd v);
  Index length() const { return values.size(); }
};

// Discretized response kernel. onset_shift prepends that many zero samples.
struct HrfKernel {
  VectorXd coefficients;
  double tr = 1.0;
  int onset_shift = 0;

  Index length() const { return coefficients.size(); }
  void validate() const;  // finite, not all zero, tr > 0
};

// Lower-triangular Toeplitz convolution operator, applied matrix-free.
class ConvolutionOperator final : public LinearDesign {
public:
  ConvolutionOperator(HrfKernel kernel, Index n);

  Index size() const override { return n_; }
  VectorXd apply(const VectorXd& x) const override;
  VectorXd apply_adjoint(const VectorXd& r) const override;
  VectorXd column(Index j) const override;
  double gram(Index i, Index j) const override;
  MatrixXd dense() const override;

  const HrfKernel& kernel() const { return kernel_; }

private:
  HrfKernel kernel_;
  Index n_;
};

// Double-gamma response kernel sampled at t = 0, tr, 2*tr, ... <= duration,
// normalized to unit l1 mass. Canonical parameters: response peak delay 6 s,
// undershoot delay 16 s, unit dispersions, undershoot ratio 1/6.
HrfKernel canonical_hrf(double tr, int onset_shift, double duration);

// Raw (unshifted, unnormalized) double-gamma density at time t.
double double_gamma(double t);

ConvolutionOperator toeplitz(const HrfKernel& h, Index n);

// Matrix-free causal convolution; agrees with toeplitz(h, n).apply().
TimeSeries convolve(const SparseSignal& s, const HrfKernel& h);

// Exactly k unit spikes at distinct positions drawn uniformly.
SparseSignal generate_sparse_signal(Index n, Index k, Rng& rng);

// Adds iid Gaussian noise with sigma = sample_std(clean) / snr.
TimeSeries add_noise_at_snr(const TimeSeries& clean, double snr, Rng& rng);

// Minimum-norm least-squares inverse. Kept around because the convolution
// matrix may be numerically singular (kernels starting at zero).
class TruncatedSvdSolver {
public:
  explicit TruncatedSvdSolver(const LinearDesign& design, double rel_threshold = 1e-10);
  VectorXd solve(const VectorXd& y) const;
  Index rank() const { return rank_; }

private:
  MatrixXd u_, v_;
  VectorXd inv_singular_;
  Index rank_ = 0;
};

VectorXd ols_estimate(const TimeSeries& y, const ConvolutionOperator& op);

double sample_std(const VectorXd& v);

}  // namespace deconv
