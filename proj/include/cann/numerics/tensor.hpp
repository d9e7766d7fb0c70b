#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cann/errors.hpp"

namespace cann::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

template <typename Scalar>
struct Node {
  Matrix<Scalar> value;
  // Empty until the first gradient write.
  Matrix<Scalar> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backprop;

  Matrix<Scalar>& grad_buffer() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix<Scalar>::Zero(value.rows(), value.cols());
    return grad;
  }
};

}  // namespace detail

/// Dense rank-2 array with an optional gradient, the node type of a dynamic
/// reverse-mode graph. Copies share the underlying node.
///
/// Vectors are 1×n rows. Higher-rank data (the per-item region slots) is laid
/// out by stacking rows, see `cann::fcl`.
template <typename Scalar>
class BasicTensor {
 public:
  using scalar_type = Scalar;
  using matrix_type = Matrix<Scalar>;
  using node_type = detail::Node<Scalar>;

  BasicTensor() : node_(std::make_shared<node_type>()) {}

  explicit BasicTensor(matrix_type value, bool requires_grad = false)
      : node_(std::make_shared<node_type>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static BasicTensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false) {
    return BasicTensor(matrix_type::Zero(rows, cols), requires_grad);
  }

  static BasicTensor scalar(Scalar v) {
    matrix_type m(1, 1);
    m(0, 0) = v;
    return BasicTensor(std::move(m));
  }

  // Creates an interior node. Only called by ops.
  static BasicTensor make_result(matrix_type value,
                                 std::vector<std::shared_ptr<node_type>> parents,
                                 std::function<void(node_type&)> backprop) {
    BasicTensor out(std::move(value));
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    out.node_->leaf = false;
    out.node_->requires_grad = needs;
    if (needs) {
      out.node_->parents = std::move(parents);
      out.node_->backprop = std::move(backprop);
    }
    return out;
  }

  const matrix_type& value() const { return node_->value; }
  // Mutable access for in-place parameter updates and finite-difference probes.
  matrix_type& mutable_value() { return node_->value; }

  const matrix_type& grad() const { return node_->grad_buffer(); }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && node_->grad.size() > 0; }
  void zero_grad() { node_->grad_buffer().setZero(); }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Eigen::Index size() const { return node_->value.size(); }
  std::vector<Eigen::Index> shape() const { return {rows(), cols()}; }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }

  Scalar item() const {
    if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string());
    return node_->value(0, 0);
  }

  std::string shape_string() const {
    return "[" + std::to_string(rows()) + "x" + std::to_string(cols()) + "]";
  }

  const std::shared_ptr<node_type>& node() const { return node_; }

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires grad.
  /// Interior gradients are reset first, so calling twice on the same graph
  /// adds the leaf gradients twice.
  void backward() const {
    if (size() != 1) throw ContractError("backward() needs a scalar loss, got shape " + shape_string());
    if (!node_->requires_grad) return;

    std::vector<node_type*> order;
    std::unordered_set<node_type*> seen;
    std::vector<std::pair<node_type*, bool>> stack{{node_.get(), false}};
    while (!stack.empty()) {
      auto [n, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        order.push_back(n);
        continue;
      }
      if (!seen.insert(n).second) continue;
      stack.emplace_back(n, true);
      for (const auto& p : n->parents)
        if (p->requires_grad && !seen.count(p.get())) stack.emplace_back(p.get(), false);
    }

    for (node_type* n : order)
      if (!n->leaf) n->grad_buffer().setZero();
    node_->grad_buffer()(0, 0) += Scalar(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      node_type* n = *it;
      if (!n->leaf && n->backprop) n->backprop(*n);
    }
  }

 private:
  std::shared_ptr<node_type> node_;
};

using Tensor = BasicTensor<double>;
using MatrixD = Matrix<double>;
using RowVectorD = RowVector<double>;

}  // namespace cann::nn
