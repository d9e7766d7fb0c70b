#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "cann/numerics/tensor.hpp"

namespace cann::nn {

template <typename Scalar>
struct BasicParameter {
  std::string name;
  BasicTensor<Scalar> tensor;
};

/// Ordered, name-unique view over a model's trainable tensors. Entries share
/// storage with the model.
template <typename Scalar>
class BasicParameterSet {
 public:
  void add(std::string name, BasicTensor<Scalar> tensor) {
    if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
    if (!tensor.requires_grad()) throw ContractError("parameter '" + name + "' does not require grad");
    entries_.push_back({std::move(name), std::move(tensor)});
  }

  bool contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& p) { return p.name == name; });
  }

  const BasicTensor<Scalar>& at(const std::string& name) const {
    for (const auto& p : entries_)
      if (p.name == name) return p.tensor;
    throw ContractError("no parameter named '" + name + "'");
  }

  void zero_grad() {
    for (auto& p : entries_) p.tensor.zero_grad();
  }

  Eigen::Index total_size() const {
    Eigen::Index n = 0;
    for (const auto& p : entries_) n += p.tensor.size();
    return n;
  }

  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

 private:
  std::vector<BasicParameter<Scalar>> entries_;
};

using Parameter = BasicParameter<double>;
using ParameterSet = BasicParameterSet<double>;

/// Non-trainable state (batch-norm running statistics) exposed for persistence.
struct Buffer {
  std::string name;
  RowVectorD* values;
};

}  // namespace cann::nn
