#include "cann/model/gcl.hpp"

#include <cmath>

namespace cann::gcl {

namespace {

Tensor weight(Eigen::Index in, Eigen::Index out, nn::Rng& rng) {
  return Tensor(nn::glorot_uniform<double>(in, out, rng), true);
}

Tensor bias(Eigen::Index n) { return Tensor::zeros(1, n, true); }

}  // namespace

void GclConfig::validate() const {
  if (d_c < 1 || d_f < 1 || heads < 1 || blocks < 1) throw InputError("gcl config: all dimensions must be positive");
  if (k < 2) throw InputError("gcl config: k must be at least 2");
  if (d_f % heads != 0)
    throw InputError("gcl config: d_f=" + std::to_string(d_f) + " is not divisible by S=" + std::to_string(heads));
}

GclParams GclParams::init(const GclConfig& cfg, nn::Rng& rng) {
  cfg.validate();
  const auto d_c = cfg.d_c;
  const auto d_f = cfg.d_f;
  const auto d_s = cfg.head_dim();
  GclParams p;
  p.W_f1 = weight(d_c, d_c, rng);
  p.b_f1 = bias(d_c);
  p.W_f2 = weight(d_c, d_f, rng);
  p.b_f2 = bias(d_f);
  p.padding = Tensor::zeros(1, d_c, true);
  for (Eigen::Index b = 0; b < cfg.blocks; ++b) {
    BlockParams block;
    for (Eigen::Index s = 0; s < cfg.heads; ++s)
      block.heads.push_back({weight(d_f, d_s, rng), bias(d_s), weight(d_s, d_s, rng), weight(d_s, d_s, rng)});
    block.W_n1 = weight(d_f, d_f, rng);
    block.b_n1 = bias(d_f);
    block.W_n2 = weight(d_f, d_f, rng);
    block.b_n2 = bias(d_f);
    block.W_bn = weight(d_f, d_f, rng);
    block.b_bn = bias(d_f);
    block.bn = nn::BatchNormState<double>(d_f);
    p.blocks.push_back(std::move(block));
  }
  return p;
}

void GclParams::collect(nn::ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + "W_f1", W_f1);
  out.add(prefix + "b_f1", b_f1);
  out.add(prefix + "W_f2", W_f2);
  out.add(prefix + "b_f2", b_f2);
  out.add(prefix + "padding", padding);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    const std::string bp = prefix + "block" + std::to_string(b) + ".";
    for (std::size_t s = 0; s < block.heads.size(); ++s) {
      const std::string hp = bp + "head" + std::to_string(s) + ".";
      out.add(hp + "W_s", block.heads[s].W_s);
      out.add(hp + "b_s", block.heads[s].b_s);
      out.add(hp + "W_q", block.heads[s].W_q);
      out.add(hp + "W_k", block.heads[s].W_k);
    }
    out.add(bp + "W_n1", block.W_n1);
    out.add(bp + "b_n1", block.b_n1);
    out.add(bp + "W_n2", block.W_n2);
    out.add(bp + "b_n2", block.b_n2);
    out.add(bp + "W_bn", block.W_bn);
    out.add(bp + "b_bn", block.b_bn);
    out.add(bp + "bn.gamma", block.bn.gamma);
    out.add(bp + "bn.beta", block.bn.beta);
  }
}

void GclParams::collect_buffers(std::vector<nn::Buffer>& out, const std::string& prefix) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string bp = prefix + "block" + std::to_string(b) + ".bn.";
    out.push_back({bp + "running_mean", &blocks[b].bn.running_mean});
    out.push_back({bp + "running_var", &blocks[b].bn.running_var});
  }
}

Tensor reduce_visual(const Tensor& x, const GclParams& params) {
  if (x.cols() != params.W_f1.rows())
    throw ShapeError("reduce_visual: input width " + std::to_string(x.cols()) + ", expected d_c=" +
                     std::to_string(params.W_f1.rows()));
  auto hidden = nn::relu(nn::add(nn::matmul(x, params.W_f1), params.b_f1));
  return nn::add(nn::matmul(hidden, params.W_f2), params.b_f2);
}

Tensor coherence_logits(const Tensor& projected, const HeadParams& head) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head.W_q.rows()));
  auto q = nn::matmul(projected, head.W_q);
  auto key = nn::matmul(projected, head.W_k);
  return nn::scale(nn::matmul(q, nn::transpose(key)), inv_sqrt);
}

Tensor coherence_scores(const Tensor& projected, const HeadParams& head) {
  return nn::softmax_rows(coherence_logits(projected, head));
}

Tensor attend(const Tensor& input, const BlockParams& block, Eigen::Index k,
              std::vector<std::vector<MatrixD>>* maps) {
  if (input.rows() % k != 0)
    throw ShapeError("attend: " + input.shape_string() + " is not a stack of k=" + std::to_string(k) + " rows");
  const Eigen::Index groups = input.rows() / k;
  if (maps) maps->assign(block.heads.size(), {});

  std::vector<Tensor> heads;
  heads.reserve(block.heads.size());
  for (std::size_t s = 0; s < block.heads.size(); ++s) {
    const auto& head = block.heads[s];
    auto projected = nn::add(nn::matmul(input, head.W_s), head.b_s);
    std::vector<Tensor> parts;
    parts.reserve(static_cast<std::size_t>(groups));
    for (Eigen::Index g = 0; g < groups; ++g) {
      auto xs = nn::slice_rows(projected, g * k, k);
      auto alpha = coherence_scores(xs, head);
      if (maps) (*maps)[s].push_back(alpha.value());
      parts.push_back(nn::matmul(alpha, xs));
    }
    heads.push_back(groups == 1 ? parts.front() : nn::concat_rows<double>(parts));
  }
  return heads.size() == 1 ? heads.front() : nn::concat_cols<double>(heads);
}

Tensor gcl_block(const Tensor& input, BlockParams& block, Eigen::Index k, nn::Mode mode,
                 std::vector<std::vector<MatrixD>>* maps) {
  const Eigen::Index d_f = block.W_n1.rows();
  if (input.cols() != d_f)
    throw ShapeError("gcl_block: input " + input.shape_string() + ", expected width d_f=" + std::to_string(d_f));
  auto mixed = nn::add(attend(input, block, k, maps), input);
  auto ff = nn::add(nn::matmul(nn::relu(nn::add(nn::matmul(mixed, block.W_n1), block.b_n1)), block.W_n2), block.b_n2);
  auto projected = nn::add(nn::matmul(ff, block.W_bn), block.b_bn);
  return nn::batch_norm(projected, block.bn, mode);
}

Tensor gcl_forward(const PaddedBatch& batch, GclParams& params, const GclConfig& cfg, nn::Mode mode,
                   GclTrace* trace) {
  if (batch.k != cfg.k) throw ShapeError("gcl_forward: batch padded to " + std::to_string(batch.k) +
                                          ", model expects k=" + std::to_string(cfg.k));
  if (batch.global.cols() != cfg.d_c)
    throw ShapeError("gcl_forward: raw features of width " + std::to_string(batch.global.cols()) +
                     ", expected d_c=" + std::to_string(cfg.d_c));
  Tensor raw(batch.global);
  if (!batch.padding_rows.empty()) raw = nn::overwrite_rows(raw, batch.padding_rows, params.padding);
  auto h = reduce_visual(raw, params);
  if (trace) trace->attention.assign(params.blocks.size(), {});
  for (std::size_t b = 0; b < params.blocks.size(); ++b)
    h = gcl_block(h, params.blocks[b], cfg.k, mode, trace ? &trace->attention[b] : nullptr);
  return h;
}

}  // namespace cann::gcl
