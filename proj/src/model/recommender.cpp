#include "cann/model/recommender.hpp"

#include <algorithm>
#include <numeric>

namespace cann::recommender {

PredictionHead PredictionHead::init(Eigen::Index d_f, Eigen::Index d_y, nn::Rng& rng) {
  return {Tensor(nn::glorot_uniform<double>(d_f + d_y, d_f, rng), true), Tensor::zeros(1, d_f, true)};
}

void PredictionHead::collect(nn::ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + "W_h", W_h);
  out.add(prefix + "b_h", b_h);
}

Tensor predict_embedding(const Tensor& global, const Tensor& focal, Eigen::Index k, const PredictionHead& head) {
  if (global.rows() != focal.rows())
    throw ShapeError("predict_embedding: global " + global.shape_string() + " and focal " + focal.shape_string() +
                     " row counts differ");
  if (global.cols() + focal.cols() != head.W_h.rows())
    throw ShapeError("predict_embedding: fused width " + std::to_string(global.cols() + focal.cols()) +
                     " does not match head input " + std::to_string(head.W_h.rows()));
  auto fused = nn::concat_cols({nn::group_mean_rows(global, k), nn::group_mean_rows(focal, k)});
  return nn::add(nn::matmul(fused, head.W_h), head.b_h);
}

Tensor candidate_logits(const Tensor& predictions, const Tensor& candidates) {
  if (predictions.cols() != candidates.cols())
    throw ShapeError("candidate_logits: prediction " + predictions.shape_string() + " vs candidates " +
                     candidates.shape_string());
  return nn::matmul(predictions, nn::transpose(candidates));
}

Tensor candidate_probability(const Tensor& predictions, const Tensor& candidates) {
  if (candidates.rows() < 2)
    throw InputError("candidate_probability: need at least 2 candidates, got " + std::to_string(candidates.rows()));
  return nn::softmax_rows(candidate_logits(predictions, candidates));
}

Tensor loss(const Tensor& logits, std::span<const Eigen::Index> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw ContractError("loss: " + std::to_string(targets.size()) + " targets for " + std::to_string(logits.rows()) +
                        " predictions");
  for (auto t : targets)
    if (t < 0 || t >= logits.cols())
      throw ContractError("loss: ground-truth index " + std::to_string(t) + " is not in the candidate pool of " +
                          std::to_string(logits.cols()));
  auto log_probs = nn::log_softmax_rows(logits);
  return nn::scale(nn::mean(nn::pick(log_probs, std::vector<Eigen::Index>(targets.begin(), targets.end()))), -1.0);
}

std::size_t Ranking::rank_of(std::size_t index) const {
  auto it = std::find(order.begin(), order.end(), index);
  if (it == order.end()) throw ContractError("rank_of: candidate index out of range");
  return static_cast<std::size_t>(it - order.begin()) + 1;
}

Ranking rank(std::vector<double> probabilities) {
  Ranking r;
  r.order.resize(probabilities.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return probabilities[a] > probabilities[b]; });
  r.probabilities = std::move(probabilities);
  return r;
}

}  // namespace cann::recommender
