#pragma once

#include <Eigen/Core>

namespace deconv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Square design matrix seen through the operations the path solvers need.
// Lets the homotopy code run matrix-free on Toeplitz convolution operators
// and on explicit dense matrices with the same implementation.
class LinearDesign {
public:
  virtual ~LinearDesign() = default;

  virtual Index size() const = 0;

  // H x
  virtual VectorXd apply(const VectorXd& x) const = 0;

  // H^T r
  virtual VectorXd apply_adjoint(const VectorXd& r) const = 0;

  // Column j as a dense vector.
  virtual VectorXd column(Index j) const = 0;

  // (H^T H)_{ij}; default falls back to a column dot product.
  virtual double gram(Index i, Index j) const { return column(i).dot(column(j)); }

  virtual MatrixXd dense() const;
};

class DenseDesign final : public LinearDesign {
public:
  explicit DenseDesign(MatrixXd m);

  Index size() const override { return m_.rows(); }
  VectorXd apply(const VectorXd& x) const override { return m_ * x; }
  VectorXd apply_adjoint(const VectorXd& r) const override { return m_.transpose() * r; }
  VectorXd column(Index j) const override { return m_.col(j); }
  double gram(Index i, Index j) const override { return m_.col(i).dot(m_.col(j)); }
  MatrixXd dense() const override { return m_; }

private:
  MatrixXd m_;
};

}  // namespace deconv
