#pragma once

#include <cmath>
#include <vector>

#include "stylo/nn.hpp"

namespace stylo {

/// Piecewise-constant learning rate: `initial` for epochs 1..decay_epoch,
/// then multiplied by `factor` once. Epochs are 1-based.
struct StepSchedule {
  double initial = 2e-5;
  int decay_epoch = 10;
  double factor = 0.1;

  double at_epoch(int epoch) const { return epoch > decay_epoch ? initial * factor : initial; }
};

/// AdamW with decoupled weight decay. Decay applies only to parameters
/// flagged `decay` (weight matrices).
template <typename Scalar>
class AdamW {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  explicit AdamW(std::vector<nn::Parameter<Scalar>*> params, double wd = 0.01)
      : weight_decay(wd), params_(std::move(params)) {
    for (auto* p : params_) {
      m_.push_back(nn::Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(nn::Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  /// One update using the accumulated gradients scaled by `grad_scale`.
  void step(double lr, double grad_scale = 1.0) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    const auto b1 = static_cast<Scalar>(beta1), b2 = static_cast<Scalar>(beta2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      if (p.decay && weight_decay > 0.0) p.value *= static_cast<Scalar>(1.0 - lr * weight_decay);
      nn::Matrix<Scalar> g = p.grad * static_cast<Scalar>(grad_scale);
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseAbs2();
      const auto step_size = static_cast<Scalar>(lr / c1);
      const auto denom_scale = static_cast<Scalar>(1.0 / std::sqrt(c2));
      p.value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() * denom_scale + static_cast<Scalar>(eps));
    }
  }

  long steps() const { return t_; }

 private:
  std::vector<nn::Parameter<Scalar>*> params_;
  std::vector<nn::Matrix<Scalar>> m_, v_;
  long t_ = 0;
};

}  // namespace stylo
