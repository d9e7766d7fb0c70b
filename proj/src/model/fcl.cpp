#include "cann/model/fcl.hpp"

#include <cmath>

namespace cann::fcl {

void FclConfig::validate() const {
  if (d_region < 1 || d_y < 1 || heads < 1) throw InputError("fcl config: all dimensions must be positive");
  if (d_y % heads != 0)
    throw InputError("fcl config: d_y=" + std::to_string(d_y) + " is not divisible by S_f=" + std::to_string(heads));
}

FclParams FclParams::init(const FclConfig& cfg, nn::Rng& rng) {
  cfg.validate();
  FclParams p;
  p.W_r = Tensor(nn::glorot_uniform<double>(cfg.d_region, cfg.d_y, rng), true);
  p.b_r = Tensor::zeros(1, cfg.d_y, true);
  const auto d_a = cfg.head_dim();
  for (Eigen::Index h = 0; h < cfg.heads; ++h)
    p.within.push_back({Tensor(nn::glorot_uniform<double>(cfg.d_y, d_a, rng), true),
                        Tensor(nn::glorot_uniform<double>(cfg.d_y, d_a, rng), true)});
  for (Eigen::Index h = 0; h < cfg.heads; ++h)
    p.across.push_back({Tensor(nn::glorot_uniform<double>(cfg.d_y, d_a, rng), true),
                        Tensor(nn::glorot_uniform<double>(cfg.d_y, d_a, rng), true)});
  return p;
}

void FclParams::collect(nn::ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + "W_r", W_r);
  out.add(prefix + "b_r", b_r);
  for (std::size_t h = 0; h < within.size(); ++h) {
    out.add(prefix + "within.head" + std::to_string(h) + ".W_q", within[h].W_q);
    out.add(prefix + "within.head" + std::to_string(h) + ".W_k", within[h].W_k);
  }
  for (std::size_t h = 0; h < across.size(); ++h) {
    out.add(prefix + "across.head" + std::to_string(h) + ".W_q", across[h].W_q);
    out.add(prefix + "across.head" + std::to_string(h) + ".W_k", across[h].W_k);
  }
}

Tensor reduce_region_features(const Tensor& raw, const FclParams& params) {
  if (raw.cols() != params.W_r.rows())
    throw ShapeError("reduce_region_features: input width " + std::to_string(raw.cols()) + ", expected " +
                     std::to_string(params.W_r.rows()));
  return nn::relu(nn::add(nn::matmul(raw, params.W_r), params.b_r));
}

Tensor grouped_attention(const Tensor& x, const std::vector<AttentionHead>& heads, Eigen::Index group,
                         std::vector<std::vector<MatrixD>>* maps, bool identity) {
  if (group <= 0 || x.rows() % group != 0)
    throw ShapeError("grouped_attention: " + x.shape_string() + " is not a stack of " + std::to_string(group) + " rows");
  if (heads.empty()) throw ContractError("grouped_attention: no heads");
  const Eigen::Index groups = x.rows() / group;
  if (maps) maps->assign(heads.size(), {});

  if (identity) {
    if (maps)
      for (auto& per_head : *maps) per_head.assign(static_cast<std::size_t>(groups), MatrixD::Identity(group, group));
    return x;
  }

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(heads.front().W_q.cols()));
  const double inv_heads = 1.0 / static_cast<double>(heads.size());
  std::vector<Tensor> per_head;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    auto q = nn::matmul(x, heads[h].W_q);
    auto key = nn::matmul(x, heads[h].W_k);
    std::vector<Tensor> parts;
    parts.reserve(static_cast<std::size_t>(groups));
    for (Eigen::Index g = 0; g < groups; ++g) {
      auto qg = nn::slice_rows(q, g * group, group);
      auto kg = nn::slice_rows(key, g * group, group);
      auto alpha = nn::softmax_rows(nn::scale(nn::matmul(qg, nn::transpose(kg)), inv_sqrt));
      if (maps) (*maps)[h].push_back(alpha.value());
      parts.push_back(nn::matmul(alpha, nn::slice_rows(x, g * group, group)));
    }
    per_head.push_back(groups == 1 ? parts.front() : nn::concat_rows<double>(parts));
  }
  Tensor total = per_head.front();
  for (std::size_t h = 1; h < per_head.size(); ++h) total = nn::add(total, per_head[h]);
  return nn::scale(total, inv_heads);
}

Tensor within_item_attention(const Tensor& slots, const FclParams& params,
                             std::vector<std::vector<MatrixD>>* maps) {
  return nn::add(slots, grouped_attention(slots, params.within, kSlots, maps));
}

Tensor across_item_attention(const Tensor& slots, const FclParams& params, Eigen::Index k,
                             std::vector<std::vector<MatrixD>>* maps, bool identity) {
  auto summaries = nn::group_mean_rows(slots, kSlots);
  return grouped_attention(summaries, params.across, k, maps, identity);
}

Tensor fcl_forward(const PaddedBatch& batch, const FclParams& params, const FclConfig& cfg, FclTrace* trace,
                   FclOptions options) {
  if (batch.regions.rows() != batch.rows() * kSlots)
    throw ShapeError("fcl_forward: expected " + std::to_string(batch.rows() * kSlots) + " region rows, got " +
                     std::to_string(batch.regions.rows()));
  if (batch.regions.cols() != cfg.d_region)
    throw ShapeError("fcl_forward: region features of width " + std::to_string(batch.regions.cols()) +
                     ", expected " + std::to_string(cfg.d_region));
  auto reduced = reduce_region_features(Tensor(batch.regions), params);
  auto mid = within_item_attention(reduced, params, trace ? &trace->within : nullptr);
  return across_item_attention(mid, params, batch.k, trace ? &trace->across : nullptr, options.identity_across);
}

}  // namespace cann::fcl
