#include "cann/model/cann_model.hpp"

namespace cann {

bool ModelConfig::operator==(const ModelConfig& o) const {
  return gcl.d_c == o.gcl.d_c && gcl.d_f == o.gcl.d_f && gcl.heads == o.gcl.heads && gcl.blocks == o.gcl.blocks &&
         gcl.k == o.gcl.k && fcl.d_region == o.fcl.d_region && fcl.d_y == o.fcl.d_y && fcl.heads == o.fcl.heads;
}

CannModel::CannModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng rng(seed);
  gcl_ = gcl::GclParams::init(config_.gcl, rng);
  fcl_ = fcl::FclParams::init(config_.fcl, rng);
  head_ = recommender::PredictionHead::init(config_.gcl.d_f, config_.fcl.d_y, rng);
}

nn::Tensor CannModel::embed(const PaddedBatch& batch, nn::Mode mode, ModelTrace* trace) {
  auto global = gcl::gcl_forward(batch, gcl_, config_.gcl, mode, trace ? &trace->gcl : nullptr);
  auto focal = fcl::fcl_forward(batch, fcl_, config_.fcl, trace ? &trace->fcl : nullptr);
  return recommender::predict_embedding(global, focal, batch.k, head_);
}

nn::Tensor CannModel::candidate_embeddings(const nn::MatrixD& raw) const {
  return gcl::reduce_visual(nn::Tensor(raw), gcl_);
}

recommender::Ranking CannModel::score_candidates(const std::vector<ItemFeatures>& seed, const nn::MatrixD& candidates) {
  const std::vector<std::vector<ItemFeatures>> one{seed};
  auto batch = pad_left(one, config_.gcl.k);
  auto prediction = embed(batch, nn::Mode::eval);
  auto probs = recommender::candidate_probability(prediction, candidate_embeddings(candidates));
  const auto& row = probs.value();
  return recommender::rank(std::vector<double>(row.data(), row.data() + row.cols()));
}

nn::ParameterSet CannModel::parameters() const {
  nn::ParameterSet set;
  gcl_.collect(set);
  fcl_.collect(set);
  head_.collect(set);
  return set;
}

std::vector<nn::Buffer> CannModel::buffers() {
  std::vector<nn::Buffer> out;
  gcl_.collect_buffers(out);
  return out;
}

}  // namespace cann
