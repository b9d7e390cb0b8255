#pragma once

#include <Eigen/Core>

namespace deconv::kernels {

using Eigen::Index;
using Eigen::VectorXd;

// Hot inner loops of the toolkit. Each kernel exists in a serial reference
// form and an OpenMP form; the un-suffixed entry point dispatches by problem
// size. Parallelism is over output elements only, and every output element
// is accumulated in a fixed serial order, so the two forms produce bitwise
// identical results at any thread count.

// y_k = sum_{i=0}^{nh-1} h_i x_{k-i},  x_{k-i} = 0 for k-i < 0.
void conv_forward_serial(const VectorXd& h, const VectorXd& x, VectorXd& out);
void conv_forward_omp(const VectorXd& h, const VectorXd& x, VectorXd& out);
void conv_forward(const VectorXd& h, const VectorXd& x, VectorXd& out);

// c_j = sum_{i=0}^{nh-1} h_i r_{j+i},  entries past the end of r ignored.
void conv_adjoint_serial(const VectorXd& h, const VectorXd& r, VectorXd& out);
void conv_adjoint_omp(const VectorXd& h, const VectorXd& r, VectorXd& out);
void conv_adjoint(const VectorXd& h, const VectorXd& r, VectorXd& out);

// out_q = (1/(b*n)) * sum_j w_j * phi((x_q - xi_j)/b), phi the standard
// normal density. Weights may be negative; no clamping happens here.
void kde_batch_serial(const VectorXd& xi, const VectorXd& w, double bandwidth,
                      const VectorXd& queries, VectorXd& out);
void kde_batch_omp(const VectorXd& xi, const VectorXd& w, double bandwidth,
                   const VectorXd& queries, VectorXd& out);
void kde_batch(const VectorXd& xi, const VectorXd& w, double bandwidth,
               const VectorXd& queries, VectorXd& out);

// Global switch consulted by the dispatching entry points (the *_serial /
// *_omp forms ignore it). Enabled by default.
void set_parallel_enabled(bool on);
bool parallel_enabled();

}  // namespace deconv::kernels
