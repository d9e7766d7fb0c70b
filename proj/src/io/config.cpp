#include "cann/io/config.hpp"

#include <fstream>

namespace cann::io {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  segmentation.validate();
  if (train.k != model.gcl.k)
    throw InputError("config: train.k=" + std::to_string(train.k) + " disagrees with model k=" +
                     std::to_string(model.gcl.k));
}

json to_json(const ModelConfig& cfg) {
  return {{"d_c", cfg.gcl.d_c},           {"d_f", cfg.gcl.d_f},      {"heads", cfg.gcl.heads},
          {"blocks", cfg.gcl.blocks},     {"k", cfg.gcl.k},          {"d_region", cfg.fcl.d_region},
          {"d_y", cfg.fcl.d_y},           {"focal_heads", cfg.fcl.heads}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig base) {
  try {
    read(j, "d_c", base.gcl.d_c);
    read(j, "d_f", base.gcl.d_f);
    read(j, "heads", base.gcl.heads);
    read(j, "blocks", base.gcl.blocks);
    read(j, "k", base.gcl.k);
    read(j, "d_region", base.fcl.d_region);
    read(j, "d_y", base.fcl.d_y);
    read(j, "focal_heads", base.fcl.heads);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  return base;
}

json to_json(const train::TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"k", cfg.k},
          {"lr0", cfg.lr0},
          {"decay_factor", cfg.decay_factor},
          {"decay_every_epochs", cfg.decay_every_epochs},
          {"rng_seed", cfg.rng_seed},
          {"steps_per_epoch", cfg.steps_per_epoch},
          {"early_stop", cfg.early_stop}};
}

train::TrainConfig train_config_from_json(const json& j, train::TrainConfig base) {
  try {
    read(j, "epochs", base.epochs);
    read(j, "batch_size", base.batch_size);
    read(j, "k", base.k);
    read(j, "lr0", base.lr0);
    read(j, "decay_factor", base.decay_factor);
    read(j, "decay_every_epochs", base.decay_every_epochs);
    read(j, "rng_seed", base.rng_seed);
    read(j, "steps_per_epoch", base.steps_per_epoch);
    read(j, "early_stop", base.early_stop);
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  return base;
}

json to_json(const regions::SegmentationConfig& cfg) {
  return {{"felz_k", cfg.felz_k},
          {"sigma", cfg.sigma},
          {"min_size", cfg.min_size},
          {"regions_per_mode", cfg.regions_per_mode}};
}

regions::SegmentationConfig segmentation_config_from_json(const json& j, regions::SegmentationConfig base) {
  try {
    read(j, "felz_k", base.felz_k);
    read(j, "sigma", base.sigma);
    read(j, "min_size", base.min_size);
    read(j, "regions_per_mode", base.regions_per_mode);
  } catch (const json::exception& e) {
    throw ParseError(std::string("segmentation config: ") + e.what());
  }
  return base;
}

json to_json(const RunConfig& cfg) {
  return {{"model", to_json(cfg.model)},
          {"train", to_json(cfg.train)},
          {"segmentation", to_json(cfg.segmentation)},
          {"seed", cfg.seed}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  if (j.contains("segmentation")) cfg.segmentation = segmentation_config_from_json(j.at("segmentation"));
  try {
    read(j, "seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace cann::io
