#pragma once

#include <cstdint>
#include <vector>

#include "cann/model/collection.hpp"
#include "cann/model/fcl.hpp"
#include "cann/model/gcl.hpp"
#include "cann/model/recommender.hpp"

namespace cann {

struct ModelConfig {
  gcl::GclConfig gcl;
  fcl::FclConfig fcl;

  void validate() const {
    gcl.validate();
    fcl.validate();
  }
  bool operator==(const ModelConfig& other) const;
};

struct ModelTrace {
  gcl::GclTrace gcl;
  fcl::FclTrace fcl;
};

/// Global and focal coherence learners plus the prediction head.
class CannModel {
 public:
  CannModel(ModelConfig config, std::uint64_t seed);
  CannModel(const CannModel&) = delete;
  CannModel& operator=(const CannModel&) = delete;
  CannModel(CannModel&&) = default;
  CannModel& operator=(CannModel&&) = default;

  const ModelConfig& config() const { return config_; }

  /// Prediction embeddings x̂, one row per collection of the batch.
  nn::Tensor embed(const PaddedBatch& batch, nn::Mode mode, ModelTrace* trace = nullptr);

  /// Candidate representations: the global feature reduction of each raw row.
  nn::Tensor candidate_embeddings(const nn::MatrixD& raw) const;

  /// Eval-mode ranking of candidates (raw global features, one per row) for
  /// a single seed collection.
  recommender::Ranking score_candidates(const std::vector<ItemFeatures>& seed, const nn::MatrixD& candidates);

  nn::ParameterSet parameters() const;
  std::vector<nn::Buffer> buffers();

  gcl::GclParams& gcl_params() { return gcl_; }
  fcl::FclParams& fcl_params() { return fcl_; }
  recommender::PredictionHead& head() { return head_; }

 private:
  ModelConfig config_;
  gcl::GclParams gcl_;
  fcl::FclParams fcl_;
  recommender::PredictionHead head_;
};

}  // namespace cann
