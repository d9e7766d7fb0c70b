#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "cann/model/cann_model.hpp"
#include "cann/regions/segmentation.hpp"
#include "cann/train/trainer.hpp"

namespace cann::io {

/// Every tunable of a run. Loaded from JSON with any subset of keys;
/// missing keys keep their defaults.
struct RunConfig {
  ModelConfig model;
  train::TrainConfig train;
  regions::SegmentationConfig segmentation;
  std::uint64_t seed = 0;

  /// Cross-field checks (S·d_s == d_f, train.k == model k, ...).
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

nlohmann::json to_json(const train::TrainConfig& cfg);
train::TrainConfig train_config_from_json(const nlohmann::json& j, train::TrainConfig base = {});

nlohmann::json to_json(const regions::SegmentationConfig& cfg);
regions::SegmentationConfig segmentation_config_from_json(const nlohmann::json& j,
                                                          regions::SegmentationConfig base = {});

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace cann::io
