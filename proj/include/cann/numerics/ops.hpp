#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cann/numerics/tensor.hpp"

namespace cann::nn {

namespace detail {

template <typename Scalar>
std::string shape_of(const Matrix<Scalar>& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

template <typename Scalar>
Matrix<Scalar> softmax_rows_value(const Matrix<Scalar>& x) {
  Matrix<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar peak = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - peak).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_string() + " x " + b.shape_string());
  auto an = a.node();
  auto bn = b.node();
  return BasicTensor<Scalar>::make_result(a.value() * b.value(), {an, bn}, [an, bn](auto& self) {
    if (an->requires_grad) an->grad_buffer().noalias() += self.grad * bn->value.transpose();
    if (bn->requires_grad) bn->grad_buffer().noalias() += an->value.transpose() * self.grad;
  });
}

template <typename Scalar>
BasicTensor<Scalar> transpose(const BasicTensor<Scalar>& a) {
  auto an = a.node();
  return BasicTensor<Scalar>::make_result(a.value().transpose(), {an}, [an](auto& self) {
    an->grad_buffer() += self.grad.transpose();
  });
}

/// Elementwise sum. A 1×n right operand broadcasts over the rows of `a`.
template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  auto an = a.node();
  auto bn = b.node();
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    return BasicTensor<Scalar>::make_result(a.value() + b.value(), {an, bn}, [an, bn](auto& self) {
      if (an->requires_grad) an->grad_buffer() += self.grad;
      if (bn->requires_grad) bn->grad_buffer() += self.grad;
    });
  }
  if (b.rows() == 1 && a.cols() == b.cols()) {
    Matrix<Scalar> v = a.value().rowwise() + b.value().row(0);
    return BasicTensor<Scalar>::make_result(std::move(v), {an, bn}, [an, bn](auto& self) {
      if (an->requires_grad) an->grad_buffer() += self.grad;
      if (bn->requires_grad) bn->grad_buffer() += self.grad.colwise().sum();
    });
  }
  throw ShapeError("add: incompatible shapes " + a.shape_string() + " + " + b.shape_string());
}

template <typename Scalar>
BasicTensor<Scalar> scale(const BasicTensor<Scalar>& a, Scalar factor) {
  auto an = a.node();
  return BasicTensor<Scalar>::make_result(a.value() * factor, {an}, [an, factor](auto& self) {
    an->grad_buffer() += self.grad * factor;
  });
}

/// max(0, x); the subgradient at exactly 0 is 0.
template <typename Scalar>
BasicTensor<Scalar> relu(const BasicTensor<Scalar>& a) {
  auto an = a.node();
  Matrix<Scalar> v = a.value().cwiseMax(Scalar(0));
  return BasicTensor<Scalar>::make_result(std::move(v), {an}, [an](auto& self) {
    an->grad_buffer().array() += (an->value.array() > Scalar(0)).select(self.grad.array(), Scalar(0));
  });
}

/// Row-wise softmax with per-row max subtraction.
template <typename Scalar>
BasicTensor<Scalar> softmax_rows(const BasicTensor<Scalar>& a) {
  auto an = a.node();
  Matrix<Scalar> y = detail::softmax_rows_value(a.value());
  return BasicTensor<Scalar>::make_result(y, {an}, [an](auto& self) {
    const auto& y = self.value;
    // dx = y * (dy - <dy, y>) per row
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots = (self.grad.array() * y.array()).rowwise().sum();
    an->grad_buffer().array() += y.array() * (self.grad.colwise() - dots).array();
  });
}

template <typename Scalar>
BasicTensor<Scalar> log_softmax_rows(const BasicTensor<Scalar>& a) {
  auto an = a.node();
  Matrix<Scalar> out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Scalar peak = a.value().row(i).maxCoeff();
    const Scalar lse = peak + std::log((a.value().row(i).array() - peak).exp().sum());
    out.row(i) = a.value().row(i).array() - lse;
  }
  return BasicTensor<Scalar>::make_result(out, {an}, [an](auto& self) {
    Matrix<Scalar> probs = self.value.array().exp().matrix();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> total = self.grad.rowwise().sum();
    an->grad_buffer() += self.grad - (probs.array().colwise() * total.array()).matrix();
  });
}

template <typename Scalar>
BasicTensor<Scalar> sum(const BasicTensor<Scalar>& a) {
  auto an = a.node();
  Matrix<Scalar> v(1, 1);
  v(0, 0) = a.value().sum();
  return BasicTensor<Scalar>::make_result(std::move(v), {an}, [an](auto& self) {
    an->grad_buffer().array() += self.grad(0, 0);
  });
}

template <typename Scalar>
BasicTensor<Scalar> mean(const BasicTensor<Scalar>& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.size()));
}

template <typename Scalar>
BasicTensor<Scalar> slice_rows(const BasicTensor<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + a.shape_string());
  auto an = a.node();
  Matrix<Scalar> v = a.value().middleRows(start, count);
  return BasicTensor<Scalar>::make_result(std::move(v), {an}, [an, start, count](auto& self) {
    an->grad_buffer().middleRows(start, count) += self.grad;
  });
}

template <typename Scalar>
BasicTensor<Scalar> concat_rows(std::span<const BasicTensor<Scalar>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw ShapeError("concat_rows: column mismatch " + parts.front().shape_string() + " vs " + p.shape_string());
    rows += p.rows();
  }
  Matrix<Scalar> v(rows, cols);
  std::vector<std::shared_ptr<detail::Node<Scalar>>> nodes;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    nodes.push_back(p.node());
  }
  auto parents = nodes;
  return BasicTensor<Scalar>::make_result(std::move(v), std::move(parents), [nodes](auto& self) {
    Eigen::Index at = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) n->grad_buffer() += self.grad.middleRows(at, n->value.rows());
      at += n->value.rows();
    }
  });
}

template <typename Scalar>
BasicTensor<Scalar> concat_cols(std::span<const BasicTensor<Scalar>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ShapeError("concat_cols: row mismatch " + parts.front().shape_string() + " vs " + p.shape_string());
    cols += p.cols();
  }
  Matrix<Scalar> v(rows, cols);
  std::vector<std::shared_ptr<detail::Node<Scalar>>> nodes;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    nodes.push_back(p.node());
  }
  auto parents = nodes;
  return BasicTensor<Scalar>::make_result(std::move(v), std::move(parents), [nodes](auto& self) {
    Eigen::Index at = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) n->grad_buffer() += self.grad.middleCols(at, n->value.cols());
      at += n->value.cols();
    }
  });
}

template <typename Scalar>
BasicTensor<Scalar> concat_rows(std::initializer_list<BasicTensor<Scalar>> parts) {
  return concat_rows<Scalar>(std::span<const BasicTensor<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicTensor<Scalar> concat_cols(std::initializer_list<BasicTensor<Scalar>> parts) {
  return concat_cols<Scalar>(std::span<const BasicTensor<Scalar>>(parts.begin(), parts.size()));
}

/// Mean over consecutive blocks of `group` rows: (n·group)×d -> n×d.
template <typename Scalar>
BasicTensor<Scalar> group_mean_rows(const BasicTensor<Scalar>& a, Eigen::Index group) {
  if (group <= 0 || a.rows() % group != 0)
    throw ShapeError("group_mean_rows: " + a.shape_string() + " not divisible into groups of " + std::to_string(group));
  const Eigen::Index n = a.rows() / group;
  Matrix<Scalar> v(n, a.cols());
  for (Eigen::Index g = 0; g < n; ++g) v.row(g) = a.value().middleRows(g * group, group).colwise().mean();
  auto an = a.node();
  return BasicTensor<Scalar>::make_result(std::move(v), {an}, [an, group, n](auto& self) {
    auto& g = an->grad_buffer();
    const Scalar w = Scalar(1) / static_cast<Scalar>(group);
    for (Eigen::Index i = 0; i < n; ++i) g.middleRows(i * group, group).rowwise() += self.grad.row(i) * w;
  });
}

/// Copy of `base` with each row listed in `rows` replaced by the 1×d `fill`.
/// The gradient of `fill` is the sum over the replaced rows.
template <typename Scalar>
BasicTensor<Scalar> overwrite_rows(const BasicTensor<Scalar>& base, std::vector<Eigen::Index> rows,
                                   const BasicTensor<Scalar>& fill) {
  if (fill.rows() != 1 || fill.cols() != base.cols())
    throw ShapeError("overwrite_rows: fill " + fill.shape_string() + " does not match rows of " + base.shape_string());
  Matrix<Scalar> v = base.value();
  for (auto r : rows) {
    if (r < 0 || r >= base.rows()) throw ShapeError("overwrite_rows: row index out of range");
    v.row(r) = fill.value().row(0);
  }
  auto bn = base.node();
  auto fn = fill.node();
  return BasicTensor<Scalar>::make_result(std::move(v), {bn, fn}, [bn, fn, rows = std::move(rows)](auto& self) {
    if (bn->requires_grad) {
      Matrix<Scalar> g = self.grad;
      for (auto r : rows) g.row(r).setZero();
      bn->grad_buffer() += g;
    }
    if (fn->requires_grad)
      for (auto r : rows) fn->grad_buffer().row(0) += self.grad.row(r);
  });
}

/// out(i, 0) = a(i, index[i]).
template <typename Scalar>
BasicTensor<Scalar> pick(const BasicTensor<Scalar>& a, std::vector<Eigen::Index> index) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows())
    throw ShapeError("pick: " + std::to_string(index.size()) + " indices for " + a.shape_string());
  Matrix<Scalar> v(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (index[i] < 0 || index[i] >= a.cols()) throw ShapeError("pick: column index out of range");
    v(i, 0) = a.value()(i, index[i]);
  }
  auto an = a.node();
  return BasicTensor<Scalar>::make_result(std::move(v), {an}, [an, index = std::move(index)](auto& self) {
    auto& g = an->grad_buffer();
    for (std::size_t i = 0; i < index.size(); ++i) g(static_cast<Eigen::Index>(i), index[i]) += self.grad(i, 0);
  });
}

}  // namespace cann::nn
