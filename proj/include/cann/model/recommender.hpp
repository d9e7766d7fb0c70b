#pragma once

#include <span>
#include <vector>

#include "cann/numerics.hpp"

namespace cann::recommender {

using nn::MatrixD;
using nn::Tensor;

struct PredictionHead {
  Tensor W_h;  // (d_f + d_y)×d_f
  Tensor b_h;  // 1×d_f

  static PredictionHead init(Eigen::Index d_f, Eigen::Index d_y, nn::Rng& rng);
  void collect(nn::ParameterSet& out, const std::string& prefix = "head.") const;
};

/// Mean-pools global (n·k×d_f) and focal (n·k×d_y) rows per collection,
/// concatenates them, and applies the head's linear map. Returns n×d_f.
Tensor predict_embedding(const Tensor& global, const Tensor& focal, Eigen::Index k, const PredictionHead& head);

/// Dot-product logits of every prediction (rows) against every candidate.
Tensor candidate_logits(const Tensor& predictions, const Tensor& candidates);

/// Softmax over candidates, one row per prediction. Needs at least two candidates.
Tensor candidate_probability(const Tensor& predictions, const Tensor& candidates);

/// Mean negative log-likelihood of the target column of each logit row.
Tensor loss(const Tensor& logits, std::span<const Eigen::Index> targets);

/// Candidates ordered by descending probability, ties kept in input order.
struct Ranking {
  std::vector<std::size_t> order;
  std::vector<double> probabilities;  // by input candidate index

  /// 1-based rank of candidate `index`.
  std::size_t rank_of(std::size_t index) const;
};

Ranking rank(std::vector<double> probabilities);

}  // namespace cann::recommender
