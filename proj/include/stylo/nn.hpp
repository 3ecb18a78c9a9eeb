#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace stylo::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A trainable tensor and its accumulated gradient. Biases and gains are
/// stored as 1 x n matrices.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool decay = true;  // subject to weight decay

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols, bool decayed)
      : name(std::move(n)), value(Matrix<Scalar>::Zero(rows, cols)), grad(Matrix<Scalar>::Zero(rows, cols)),
        decay(decayed) {}

  void zero_grad() { grad.setZero(); }
};

/// y = x W + b
template <typename Scalar>
Matrix<Scalar> linear(const Matrix<Scalar>& x, const Parameter<Scalar>& w, const Parameter<Scalar>& b) {
  Matrix<Scalar> y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

/// Accumulates dW, db and returns dx.
template <typename Scalar>
Matrix<Scalar> linear_backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy, Parameter<Scalar>& w,
                               Parameter<Scalar>& b) {
  w.grad.noalias() += x.transpose() * dy;
  b.grad.row(0) += dy.colwise().sum();
  return dy * w.value.transpose();
}

template <typename Scalar>
struct LayerNormCache {
  Matrix<Scalar> xhat;
  ColVector<Scalar> inv_std;
};

template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const Parameter<Scalar>& gamma, const Parameter<Scalar>& beta,
                          LayerNormCache<Scalar>& cache, Scalar eps = Scalar(1e-5)) {
  const Scalar d = static_cast<Scalar>(x.cols());
  ColVector<Scalar> mean = x.rowwise().sum() / d;
  Matrix<Scalar> centered = x.colwise() - mean;
  ColVector<Scalar> var = centered.array().square().rowwise().sum() / d;
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.xhat = cache.inv_std.asDiagonal() * centered;
  Matrix<Scalar> y = cache.xhat * gamma.value.row(0).asDiagonal();
  y.rowwise() += beta.value.row(0);
  return y;
}

template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const LayerNormCache<Scalar>& cache,
                                   Parameter<Scalar>& gamma, Parameter<Scalar>& beta) {
  const Scalar d = static_cast<Scalar>(dy.cols());
  gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  Matrix<Scalar> dxhat = dy * gamma.value.row(0).asDiagonal();
  ColVector<Scalar> sum_dxhat = dxhat.rowwise().sum();
  ColVector<Scalar> sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum();
  Matrix<Scalar> dx = (d * dxhat).colwise() - sum_dxhat;
  dx -= sum_dxhat_xhat.asDiagonal() * cache.xhat;
  return (cache.inv_std / d).asDiagonal() * dx;
}

/// tanh approximation of GELU.
template <typename Scalar>
Matrix<Scalar> gelu(const Matrix<Scalar>& x) {
  const Scalar k = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  return x.unaryExpr([k](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::tanh(k * (v + Scalar(0.044715) * v * v * v)));
  });
}

template <typename Scalar>
Matrix<Scalar> gelu_backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy) {
  const Scalar k = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  Matrix<Scalar> deriv = x.unaryExpr([k](Scalar v) {
    Scalar t = std::tanh(k * (v + Scalar(0.044715) * v * v * v));
    return Scalar(0.5) * (Scalar(1) + t) +
           Scalar(0.5) * v * (Scalar(1) - t * t) * k * (Scalar(1) + Scalar(3) * Scalar(0.044715) * v * v);
  });
  return dy.cwiseProduct(deriv);
}

/// Row-wise softmax, in place.
template <typename Scalar>
void softmax_rows(Matrix<Scalar>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

/// Gradient through a row-wise softmax given its output.
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& probs, const Matrix<Scalar>& dprobs) {
  ColVector<Scalar> dot = (probs.array() * dprobs.array()).rowwise().sum();
  Matrix<Scalar> shifted = dprobs.colwise() - dot;
  return probs.cwiseProduct(shifted);
}

}  // namespace stylo::nn
