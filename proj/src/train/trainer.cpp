#include "cann/train/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace cann::train {

void TrainConfig::validate() const {
  if (epochs < 0) throw InputError("train config: epochs must be non-negative");
  if (batch_size < 2) throw InputError("train config: batch size must be at least 2 for in-batch candidates");
  if (k < 2) throw InputError("train config: k must be at least 2");
  if (!(lr0 > 0.0)) throw InputError("train config: lr0 must be positive");
  if (!(decay_factor >= 1.0)) throw InputError("train config: decay factor must be at least 1");
  if (decay_every_epochs < 1) throw InputError("train config: decay interval must be at least 1 epoch");
  if (steps_per_epoch < 0) throw InputError("train config: steps per epoch must be non-negative");
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ContractError("lr_schedule: negative epoch");
  return cfg.lr0 / std::pow(cfg.decay_factor, epoch / cfg.decay_every_epochs);
}

Dataset::Dataset(std::vector<io::OutfitRecord> outfits, const io::FeatureStore& global,
                 const io::FeatureStore& regions)
    : outfits_(std::move(outfits)) {
  for (const auto& o : outfits_) {
    if (o.items.size() < 2)
      throw ValidationError("dataset: outfit '" + o.outfit_id + "' has fewer than 2 items");
    for (const auto& item : o.items)
      if (!features_.count(item.item_id)) features_.emplace(item.item_id, io::item_features(item.item_id, global, regions));
  }
}

const ItemFeatures& Dataset::features(const std::string& item_id) const {
  auto it = features_.find(item_id);
  if (it == features_.end()) throw InputError("dataset: no features for item '" + item_id + "'");
  return it->second;
}

TrainingBatch build_batch(const Dataset& data, const TrainConfig& cfg, nn::Rng& rng) {
  if (data.size() == 0) throw InputError("build_batch: empty dataset");
  TrainingBatch batch;
  std::map<std::string, Eigen::Index> pool;
  auto add_candidate = [&](const std::string& id) {
    if (pool.emplace(id, static_cast<Eigen::Index>(batch.candidates.size())).second) batch.candidates.push_back(id);
  };
  for (int i = 0; i < cfg.batch_size; ++i) {
    const auto which = static_cast<std::size_t>(rng.uniform_index(data.size()));
    const auto& outfit = data.outfits()[which];
    if (outfit.items.size() < 2) throw ValidationError("build_batch: outfit '" + outfit.outfit_id + "' is too short");
    if (outfit.items.size() - 1 > static_cast<std::size_t>(cfg.k))
      throw InputError("build_batch: outfit '" + outfit.outfit_id + "' does not fit k=" + std::to_string(cfg.k));
    const auto masked = static_cast<std::size_t>(rng.uniform_index(outfit.items.size()));

    std::vector<std::string> seed(static_cast<std::size_t>(cfg.k) - (outfit.items.size() - 1), kPaddingSlot);
    for (std::size_t j = 0; j < outfit.items.size(); ++j) {
      add_candidate(outfit.items[j].item_id);
      if (j != masked) seed.push_back(outfit.items[j].item_id);
    }
    batch.outfit_indices.push_back(which);
    batch.seeds.push_back(std::move(seed));
    batch.targets.push_back(outfit.items[masked].item_id);
  }
  for (const auto& t : batch.targets) batch.target_index.push_back(pool.at(t));
  return batch;
}

void sgd_step(nn::ParameterSet& params, double lr) {
  for (auto& p : params) {
    if (!p.tensor.has_grad()) throw ContractError("sgd_step: parameter '" + p.name + "' has no gradient");
    p.tensor.mutable_value() -= lr * p.tensor.grad();
    p.tensor.zero_grad();
  }
}

nn::Tensor batch_loss(CannModel& model, const Dataset& data, const TrainingBatch& batch, nn::Mode mode) {
  std::vector<std::vector<ItemFeatures>> seeds;
  seeds.reserve(batch.seeds.size());
  for (const auto& seed : batch.seeds) {
    std::vector<ItemFeatures> items;
    for (const auto& id : seed)
      if (id != kPaddingSlot) items.push_back(data.features(id));
    seeds.push_back(std::move(items));
  }
  auto padded = pad_left(seeds, model.config().gcl.k);

  nn::MatrixD candidates(static_cast<Eigen::Index>(batch.candidates.size()), model.config().gcl.d_c);
  for (std::size_t i = 0; i < batch.candidates.size(); ++i)
    candidates.row(static_cast<Eigen::Index>(i)) = data.features(batch.candidates[i]).global;

  auto predictions = model.embed(padded, mode);
  auto logits = recommender::candidate_logits(predictions, model.candidate_embeddings(candidates));
  return recommender::loss(logits, batch.target_index);
}

namespace {

int batches_per_epoch(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
  return static_cast<int>((data.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                          static_cast<std::size_t>(cfg.batch_size));
}

}  // namespace

TrainResult train(const Dataset& data, CannModel& model, const TrainConfig& cfg, const Dataset* validation,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (cfg.k != model.config().gcl.k)
    throw InputError("train: config k=" + std::to_string(cfg.k) + " but the model uses k=" +
                     std::to_string(model.config().gcl.k));
  if (data.size() == 0) throw InputError("train: empty dataset");

  nn::Rng rng(cfg.rng_seed);
  auto params = model.parameters();
  params.zero_grad();

  std::vector<TrainingBatch> validation_batches;
  if (validation && validation->size() > 0) {
    nn::Rng vrng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    for (int i = 0, n = batches_per_epoch(*validation, cfg); i < n; ++i)
      validation_batches.push_back(build_batch(*validation, cfg, vrng));
  }

  TrainResult result;
  int stalled = 0;
  std::optional<double> best;
  const int steps = batches_per_epoch(data, cfg);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    double total = 0.0;
    for (int step = 0; step < steps; ++step) {
      auto batch = build_batch(data, cfg, rng);
      auto loss = batch_loss(model, data, batch, nn::Mode::train);
      if (!std::isfinite(loss.item())) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << step << " (outfits:";
        for (auto i : batch.outfit_indices) msg << ' ' << data.outfits()[i].outfit_id;
        msg << ")";
        throw TrainingError(msg.str());
      }
      loss.backward();
      sgd_step(params, lr);
      total += loss.item();
    }

    EpochLog entry{epoch, total / steps, lr, std::nullopt};
    if (!validation_batches.empty()) {
      double v = 0.0;
      for (const auto& b : validation_batches) v += batch_loss(model, *validation, b, nn::Mode::eval).item();
      entry.validation_loss = v / static_cast<double>(validation_batches.size());
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (cfg.early_stop && entry.validation_loss) {
      const double v = *entry.validation_loss;
      if (best && (*best - v) < 1e-3 * std::abs(*best))
        ++stalled;
      else
        stalled = 0;
      if (!best || v < *best) best = v;
      if (stalled >= 3) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,mean_loss,lr\n";
  out << std::setprecision(17);
  for (const auto& e : log) out << e.epoch << ',' << e.mean_loss << ',' << e.lr << '\n';
}

}  // namespace cann::train
