#include "deconv/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <omp.h>

namespace deconv::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Below this many fused multiply-adds the fork/join overhead dominates.
constexpr long long kParallelCutoff = 1LL << 15;

inline double conv_forward_at(const VectorXd& h, const VectorXd& x, Index k) {
  const Index imax = std::min<Index>(h.size() - 1, k);
  double acc = 0.0;
  for (Index i = 0; i <= imax; ++i) acc += h[i] * x[k - i];
  return acc;
}

inline double conv_adjoint_at(const VectorXd& h, const VectorXd& r, Index j) {
  const Index imax = std::min<Index>(h.size() - 1, r.size() - 1 - j);
  double acc = 0.0;
  for (Index i = 0; i <= imax; ++i) acc += h[i] * r[j + i];
  return acc;
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double kde_at(const VectorXd& xi, const VectorXd& w, double b, double x) {
  const Index n = xi.size();
  double acc = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double u = (x - xi[j]) / b;
    acc += w[j] * std::exp(-0.5 * u * u);
  }
  return acc * kInvSqrt2Pi / (b * static_cast<double>(n));
}

inline bool go_parallel(long long work) {
  return g_parallel.load(std::memory_order_relaxed) && work >= kParallelCutoff &&
         omp_get_max_threads() > 1 && !omp_in_parallel();
}

}  // namespace

void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }
bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

void conv_forward_serial(const VectorXd& h, const VectorXd& x, VectorXd& out) {
  const Index n = x.size();
  out.resize(n);
  for (Index k = 0; k < n; ++k) out[k] = conv_forward_at(h, x, k);
}

void conv_forward_omp(const VectorXd& h, const VectorXd& x, VectorXd& out) {
  const Index n = x.size();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) out[k] = conv_forward_at(h, x, k);
}

void conv_forward(const VectorXd& h, const VectorXd& x, VectorXd& out) {
  if (go_parallel(static_cast<long long>(x.size()) * h.size()))
    conv_forward_omp(h, x, out);
  else
    conv_forward_serial(h, x, out);
}

void conv_adjoint_serial(const VectorXd& h, const VectorXd& r, VectorXd& out) {
  const Index n = r.size();
  out.resize(n);
  for (Index j = 0; j < n; ++j) out[j] = conv_adjoint_at(h, r, j);
}

void conv_adjoint_omp(const VectorXd& h, const VectorXd& r, VectorXd& out) {
  const Index n = r.size();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) out[j] = conv_adjoint_at(h, r, j);
}

void conv_adjoint(const VectorXd& h, const VectorXd& r, VectorXd& out) {
  if (go_parallel(static_cast<long long>(r.size()) * h.size()))
    conv_adjoint_omp(h, r, out);
  else
    conv_adjoint_serial(h, r, out);
}

void kde_batch_serial(const VectorXd& xi, const VectorXd& w, double bandwidth,
                      const VectorXd& queries, VectorXd& out) {
  const Index q = queries.size();
  out.resize(q);
  for (Index k = 0; k < q; ++k) out[k] = kde_at(xi, w, bandwidth, queries[k]);
}

void kde_batch_omp(const VectorXd& xi, const VectorXd& w, double bandwidth,
                   const VectorXd& queries, VectorXd& out) {
  const Index q = queries.size();
  out.resize(q);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < q; ++k) out[k] = kde_at(xi, w, bandwidth, queries[k]);
}

void kde_batch(const VectorXd& xi, const VectorXd& w, double bandwidth,
               const VectorXd& queries, VectorXd& out) {
  if (go_parallel(static_cast<long long>(xi.size()) * queries.size()))
    kde_batch_omp(xi, w, bandwidth, queries, out);
  else
    kde_batch_serial(xi, w, bandwidth, queries, out);
}

}  // namespace deconv::kernels
