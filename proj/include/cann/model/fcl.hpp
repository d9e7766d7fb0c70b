#pragma once

#include <string>
#include <vector>

#include "cann/model/collection.hpp"
#include "cann/numerics.hpp"

namespace cann::fcl {

using nn::MatrixD;
using nn::Tensor;

struct FclConfig {
  Eigen::Index d_region = 2048;  // raw region feature width
  Eigen::Index d_y = 128;        // working width of both attention levels
  Eigen::Index heads = 4;        // S_f

  Eigen::Index head_dim() const { return d_y / heads; }
  void validate() const;
};

/// Query/key maps of one attention head, d_y×d_a each.
struct AttentionHead {
  Tensor W_q;
  Tensor W_k;
};

struct FclParams {
  Tensor W_r;  // d_region×d_y
  Tensor b_r;  // 1×d_y
  std::vector<AttentionHead> within;  // over the 9 region slots of one item
  std::vector<AttentionHead> across;  // over the k item summaries

  static FclParams init(const FclConfig& cfg, nn::Rng& rng);
  void collect(nn::ParameterSet& out, const std::string& prefix = "fcl.") const;
};

/// within[head][item] is kSlots×kSlots; across[head][collection] is k×k.
struct FclTrace {
  std::vector<std::vector<MatrixD>> within;
  std::vector<std::vector<MatrixD>> across;
};

struct FclOptions {
  // Replaces every cross-item attention map by the identity.
  bool identity_across = false;
};

/// ReLU(raw W_r + b_r) over every region row.
Tensor reduce_region_features(const Tensor& raw, const FclParams& params);

/// Multi-head scaled dot-product attention inside each group of `group` rows;
/// head outputs A·x are averaged. Used by both hierarchy levels.
Tensor grouped_attention(const Tensor& x, const std::vector<AttentionHead>& heads, Eigen::Index group,
                         std::vector<std::vector<MatrixD>>* maps = nullptr, bool identity = false);

/// x + attention over each item's 9 slots.
Tensor within_item_attention(const Tensor& slots, const FclParams& params,
                             std::vector<std::vector<MatrixD>>* maps = nullptr);

/// Mean-pools the slots of every item, then attends across the k items of
/// each collection. Returns (collections·k)×d_y.
Tensor across_item_attention(const Tensor& slots, const FclParams& params, Eigen::Index k,
                             std::vector<std::vector<MatrixD>>* maps = nullptr, bool identity = false);

Tensor fcl_forward(const PaddedBatch& batch, const FclParams& params, const FclConfig& cfg,
                   FclTrace* trace = nullptr, FclOptions options = {});

}  // namespace cann::fcl
