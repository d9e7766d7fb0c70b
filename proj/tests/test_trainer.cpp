#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "cann/errors.hpp"
#include "cann/train/trainer.hpp"
#include "support.hpp"

using namespace cann;
using train::TrainConfig;

namespace {

ModelConfig tiny(Eigen::Index k) {
  ModelConfig cfg;
  cfg.gcl = {.d_c = 12, .d_f = 8, .heads = 2, .blocks = 1, .k = k};
  cfg.fcl = {.d_region = 6, .d_y = 4, .heads = 2};
  return cfg;
}

struct Fixture {
  std::vector<io::OutfitRecord> outfits;
  io::FeatureStore global, regions;

  explicit Fixture(int n = 6, int items = 4) : outfits(test::synthetic_outfits(n, items)) {
    const auto ids = test::item_ids(outfits);
    global = io::stub_features(ids, 12, 7);
    regions = io::stub_region_features(ids, 6, 7);
  }
  train::Dataset dataset() const { return train::Dataset(outfits, global, regions); }
};

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  const double expected[] = {0.2, 0.2, 0.1, 0.1, 0.05, 0.05};
  for (int e = 0; e < 6; ++e) CHECK(train::lr_schedule(e, cfg) == expected[e]);
  CHECK_THROWS_AS(train::lr_schedule(-1, cfg), ContractError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.decay_every_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("dataset validation") {
  Fixture f;
  f.outfits[2].items.resize(1);
  CHECK_THROWS_AS(f.dataset(), ValidationError);

  Fixture g;
  g.outfits[0].items[1].item_id = "unknown";
  try {
    g.dataset();
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("unknown") != std::string::npos);
  }
}

TEST_CASE("batch construction") {
  Fixture f(5, 6);
  auto data = f.dataset();
  TrainConfig cfg;
  cfg.k = 8;
  nn::Rng rng(3);
  auto batch = train::build_batch(data, cfg, rng);

  REQUIRE(batch.seeds.size() == 9);
  for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
    const auto& seed = batch.seeds[i];
    REQUIRE(seed.size() == 8);
    for (int j = 0; j < 3; ++j) CHECK(seed[j] == train::kPaddingSlot);
    for (int j = 3; j < 8; ++j) CHECK(seed[j] != train::kPaddingSlot);
    CHECK(std::find(seed.begin(), seed.end(), batch.targets[i]) == seed.end());
    CHECK(batch.candidates[batch.target_index[i]] == batch.targets[i]);
  }
  std::set<std::string> unique(batch.candidates.begin(), batch.candidates.end());
  CHECK(unique.size() == batch.candidates.size());

  SUBCASE("fixed seed reproduces the batch sequence") {
    nn::Rng a(42), b(42);
    for (int i = 0; i < 5; ++i) {
      auto x = train::build_batch(data, cfg, a);
      auto y = train::build_batch(data, cfg, b);
      CHECK(x.seeds == y.seeds);
      CHECK(x.targets == y.targets);
      CHECK(x.candidates == y.candidates);
    }
  }
  SUBCASE("outfit longer than k + 1") {
    cfg.k = 4;
    CHECK_THROWS_AS(train::build_batch(data, cfg, rng), InputError);
  }
}

TEST_CASE("sgd step") {
  nn::ParameterSet params;
  nn::Tensor w(nn::MatrixD::Constant(1, 1, 1.0), true);
  params.add("w", w);
  CHECK_THROWS_AS(train::sgd_step(params, 0.2), ContractError);

  nn::scale(nn::sum(w), 0.5).backward();
  train::sgd_step(params, 0.2);
  CHECK(w.value()(0, 0) == doctest::Approx(0.9));
  CHECK(w.grad()(0, 0) == 0.0);

  train::sgd_step(params, 0.2);  // zero gradient
  CHECK(w.value()(0, 0) == doctest::Approx(0.9));

  for (int i = 0; i < 2; ++i) {
    nn::sum(w).backward();
    train::sgd_step(params, 0.2);
  }
  CHECK(w.value()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("training") {
  Fixture f(8, 4);
  auto data = f.dataset();
  TrainConfig cfg;
  cfg.k = 4;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.steps_per_epoch = 5;
  cfg.decay_every_epochs = 100;

  SUBCASE("loss goes down and the log is written") {
    CannModel model(tiny(4), 1);
    int calls = 0;
    auto result = train::train(data, model, cfg, nullptr, [&](const train::EpochLog&) { ++calls; });
    REQUIRE(result.log.size() == 6);
    CHECK(calls == 6);
    CHECK(result.log.back().mean_loss < result.log.front().mean_loss);
    std::ostringstream out;
    train::write_loss_log(out, result.log);
    CHECK(out.str().rfind("epoch,mean_loss,lr\n0,", 0) == 0);
  }
  SUBCASE("identical seeds give identical weights") {
    CannModel a(tiny(4), 1), b(tiny(4), 1);
    train::train(data, a, cfg);
    train::train(data, b, cfg);
    auto pa = a.parameters(), pb = b.parameters();
    auto ia = pa.begin();
    for (const auto& p : pb) CHECK((ia++)->tensor.value() == p.tensor.value());
  }
  SUBCASE("validation drives early stopping") {
    cfg.epochs = 60;
    cfg.lr0 = 1e-9;  // nothing moves, so validation loss is flat at once
    auto validation = f.dataset();
    CannModel model(tiny(4), 1);
    auto result = train::train(data, model, cfg, &validation);
    CHECK(result.stopped_early);
    CHECK(result.log.size() == 4);
    CHECK(result.log[0].validation_loss.has_value());
  }
  SUBCASE("non-finite loss names the batch") {
    Fixture bad(8, 4);
    for (auto& [id, v] : bad.global.items) v(0) = std::nan("");
    auto nan_data = bad.dataset();
    CannModel model(tiny(4), 1);
    try {
      train::train(nan_data, model, cfg);
      FAIL("expected a training error");
    } catch (const train::TrainingError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("epoch 0, batch 0") != std::string::npos);
      CHECK(msg.find("outfits: o") != std::string::npos);
    }
  }
  SUBCASE("k must match the model") {
    CannModel model(tiny(5), 1);
    CHECK_THROWS_AS(train::train(data, model, cfg), InputError);
  }
}
