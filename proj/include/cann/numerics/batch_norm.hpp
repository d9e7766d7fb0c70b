#pragma once

#include <cmath>

#include "cann/numerics/tensor.hpp"

namespace cann::nn {

enum class Mode { train, eval };

/// Per-feature normalization state. Rows of the input are samples, columns
/// are features.
template <typename Scalar>
struct BatchNormState {
  BasicTensor<Scalar> gamma;
  BasicTensor<Scalar> beta;
  RowVector<Scalar> running_mean;
  RowVector<Scalar> running_var;
  Scalar momentum = Scalar(0.1);
  Scalar epsilon = Scalar(1e-5);

  BatchNormState() = default;

  explicit BatchNormState(Eigen::Index features)
      : gamma(Matrix<Scalar>::Ones(1, features), true),
        beta(Matrix<Scalar>::Zero(1, features), true),
        running_mean(RowVector<Scalar>::Zero(features)),
        running_var(RowVector<Scalar>::Ones(features)) {}

  Eigen::Index features() const { return gamma.cols(); }
};

/// Train mode normalizes by the batch statistics and folds them into the
/// running estimates (the variance estimate uses the unbiased batch variance).
/// Eval mode reads the running estimates only.
template <typename Scalar>
BasicTensor<Scalar> batch_norm(const BasicTensor<Scalar>& x, BatchNormState<Scalar>& state, Mode mode) {
  if (x.cols() != state.features())
    throw ShapeError("batch_norm: input " + x.shape_string() + " for " + std::to_string(state.features()) +
                     " features");
  const Eigen::Index n = x.rows();
  auto xn = x.node();
  auto gn = state.gamma.node();
  auto bn = state.beta.node();
  const RowVector<Scalar> gamma = state.gamma.value().row(0);
  const RowVector<Scalar> beta = state.beta.value().row(0);

  if (mode == Mode::train) {
    if (n < 2) throw InputError("batch_norm: train mode needs at least 2 rows, got " + std::to_string(n));
    const RowVector<Scalar> mu = x.value().colwise().mean();
    Matrix<Scalar> centered = x.value().rowwise() - mu;
    const RowVector<Scalar> var = centered.array().square().colwise().sum().matrix() / static_cast<Scalar>(n);
    const RowVector<Scalar> inv_std = (var.array() + state.epsilon).rsqrt().matrix();
    Matrix<Scalar> xhat = centered.array().rowwise() * inv_std.array();
    Matrix<Scalar> y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();

    const Scalar m = state.momentum;
    state.running_mean = (Scalar(1) - m) * state.running_mean + m * mu;
    state.running_var =
        (Scalar(1) - m) * state.running_var + m * (var * (static_cast<Scalar>(n) / static_cast<Scalar>(n - 1)));

    return BasicTensor<Scalar>::make_result(
        std::move(y), {xn, gn, bn}, [xn, gn, bn, xhat = std::move(xhat), inv_std, gamma, n](auto& self) {
          const auto& dy = self.grad;
          if (gn->requires_grad) gn->grad_buffer().row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
          if (bn->requires_grad) bn->grad_buffer().row(0) += dy.colwise().sum();
          if (xn->requires_grad) {
            Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.array();
            const RowVector<Scalar> s1 = dxhat.colwise().sum();
            const RowVector<Scalar> s2 = (dxhat.array() * xhat.array()).colwise().sum().matrix();
            const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
            Matrix<Scalar> dx = (dxhat * static_cast<Scalar>(n)).rowwise() - s1;
            dx.array() -= xhat.array().rowwise() * s2.array();
            dx.array().rowwise() *= (inv_std * inv_n).array();
            xn->grad_buffer() += dx;
          }
        });
  }

  const RowVector<Scalar> inv_std = (state.running_var.array() + state.epsilon).rsqrt().matrix();
  Matrix<Scalar> xhat = (x.value().rowwise() - state.running_mean).array().rowwise() * inv_std.array();
  Matrix<Scalar> y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
  return BasicTensor<Scalar>::make_result(
      std::move(y), {xn, gn, bn}, [xn, gn, bn, xhat = std::move(xhat), inv_std, gamma](auto& self) {
        const auto& dy = self.grad;
        if (gn->requires_grad) gn->grad_buffer().row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
        if (bn->requires_grad) bn->grad_buffer().row(0) += dy.colwise().sum();
        if (xn->requires_grad) xn->grad_buffer().array() += dy.array().rowwise() * (gamma.array() * inv_std.array());
      });
}

}  // namespace cann::nn
