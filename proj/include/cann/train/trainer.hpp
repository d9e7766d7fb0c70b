#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cann/io/features.hpp"
#include "cann/io/outfits.hpp"
#include "cann/model/cann_model.hpp"

namespace cann::train {

/// Raised when a step produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 9;  // m
  int k = 8;
  double lr0 = 0.2;
  double decay_factor = 2.0;
  int decay_every_epochs = 2;
  std::uint64_t rng_seed = 0;
  // Batches per epoch; 0 means ceil(outfits / batch_size).
  int steps_per_epoch = 0;
  // Stop once validation loss improves by < 0.1% for 3 epochs in a row.
  bool early_stop = true;

  void validate() const;
};

/// lr0 / decay_factor^floor(epoch / decay_every_epochs).
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Outfits with their features resolved up front.
class Dataset {
 public:
  /// Throws ValidationError for outfits with < 2 items and InputError naming
  /// any item whose features are missing.
  Dataset(std::vector<io::OutfitRecord> outfits, const io::FeatureStore& global, const io::FeatureStore& regions);

  const std::vector<io::OutfitRecord>& outfits() const { return outfits_; }
  std::size_t size() const { return outfits_.size(); }
  const ItemFeatures& features(const std::string& item_id) const;

 private:
  std::vector<io::OutfitRecord> outfits_;
  std::unordered_map<std::string, ItemFeatures> features_;
};

/// Marks a padding slot in a padded seed.
inline const std::string kPaddingSlot;

struct TrainingBatch {
  std::vector<std::size_t> outfit_indices;
  std::vector<std::vector<std::string>> seeds;  // each of length k, padding slots first
  std::vector<std::string> targets;
  std::vector<std::string> candidates;          // deduplicated, first-appearance order
  std::vector<Eigen::Index> target_index;       // position of each target in candidates
};

/// Samples batch_size outfits with replacement, masks one item of each,
/// left-pads the rest to k, and pools every batch item as candidates.
TrainingBatch build_batch(const Dataset& data, const TrainConfig& cfg, nn::Rng& rng);

/// w ← w − lr·g for every parameter, then zeroes the gradients.
void sgd_step(nn::ParameterSet& params, double lr);

/// Forward pass and loss for one batch.
nn::Tensor batch_loss(CannModel& model, const Dataset& data, const TrainingBatch& batch, nn::Mode mode);

struct EpochLog {
  int epoch;
  double mean_loss;
  double lr;
  std::optional<double> validation_loss;
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const Dataset& data, CannModel& model, const TrainConfig& cfg,
                  const Dataset* validation = nullptr, const EpochCallback& on_epoch = {});

/// CSV with header `epoch,mean_loss,lr`.
void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace cann::train
