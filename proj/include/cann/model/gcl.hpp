#pragma once

#include <string>
#include <vector>

#include "cann/model/collection.hpp"
#include "cann/numerics.hpp"

namespace cann::gcl {

using nn::MatrixD;
using nn::Tensor;

struct GclConfig {
  Eigen::Index d_c = 2048;    // raw feature width
  Eigen::Index d_f = 512;     // reduced width
  Eigen::Index heads = 4;     // visual spaces S
  Eigen::Index blocks = 4;    // stacked attention blocks
  Eigen::Index k = 8;         // collection length after padding

  Eigen::Index head_dim() const { return d_f / heads; }
  void validate() const;
};

struct HeadParams {
  Tensor W_s;  // d_f×d_s
  Tensor b_s;  // 1×d_s
  Tensor W_q;  // d_s×d_s
  Tensor W_k;  // d_s×d_s
};

struct BlockParams {
  std::vector<HeadParams> heads;
  Tensor W_n1, b_n1, W_n2, b_n2;  // feedforward, d_f×d_f
  Tensor W_bn, b_bn;              // output projection ahead of batch norm
  nn::BatchNormState<double> bn;
};

struct GclParams {
  Tensor W_f1, b_f1;  // d_c×d_c
  Tensor W_f2, b_f2;  // d_c×d_f
  Tensor padding;     // 1×d_c
  std::vector<BlockParams> blocks;

  static GclParams init(const GclConfig& cfg, nn::Rng& rng);
  void collect(nn::ParameterSet& out, const std::string& prefix = "gcl.") const;
  void collect_buffers(std::vector<nn::Buffer>& out, const std::string& prefix = "gcl.");
};

/// Attention maps by [block][head][collection], each k×k.
struct GclTrace {
  std::vector<std::vector<std::vector<MatrixD>>> attention;
};

/// ReLU(x W_f1 + b_f1) W_f2 + b_f2, applied to each row of x.
Tensor reduce_visual(const Tensor& x, const GclParams& params);

/// Pre-softmax scores (x W_q)(x W_k)^T / sqrt(d_s) over the rows of x.
Tensor coherence_logits(const Tensor& projected, const HeadParams& head);

/// Row-softmaxed coherence_logits; rows sum to one.
Tensor coherence_scores(const Tensor& projected, const HeadParams& head);

/// Multi-head attention with concatenated heads (no extra output map).
/// `input` stacks groups of k rows; attention stays inside each group.
Tensor attend(const Tensor& input, const BlockParams& block, Eigen::Index k,
              std::vector<std::vector<MatrixD>>* maps = nullptr);

/// One residual attention block: BN(W_bn f_n(f_a(H) + H) + b_bn).
Tensor gcl_block(const Tensor& input, BlockParams& block, Eigen::Index k, nn::Mode mode,
                 std::vector<std::vector<MatrixD>>* maps = nullptr);

/// Padding, reduction and the block stack. Returns (collections·k)×d_f.
Tensor gcl_forward(const PaddedBatch& batch, GclParams& params, const GclConfig& cfg, nn::Mode mode,
                   GclTrace* trace = nullptr);

}  // namespace cann::gcl
