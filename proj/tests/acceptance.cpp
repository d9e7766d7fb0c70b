// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cstdio>
#include <functional>
#include <iostream>
#include <queue>
#include <sstream>

#include "cann/eval/fitb.hpp"
#include "cann/io/checkpoint.hpp"
#include "cann/regions/grouping.hpp"
#include "cann/regions/segmentation.hpp"
#include "cann/train/trainer.hpp"
#include "cli_support.hpp"
#include "support.hpp"

using namespace cann;
using nn::MatrixD;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<ItemFeatures> random_collection(nn::Rng& rng, int n, const ModelConfig& cfg, double scale = 1.0) {
  std::vector<ItemFeatures> out;
  for (int i = 0; i < n; ++i)
    out.push_back({scale * test::random_matrix(1, cfg.gcl.d_c, rng),
                   scale * test::random_matrix(kSlots, cfg.fcl.d_region, rng)});
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.gcl = {.d_c = 12, .d_f = 16, .heads = 2, .blocks = 2, .k = 4};
  cfg.fcl = {.d_region = 10, .d_y = 8, .heads = 2};
  nn::Rng rng(2024);
  CannModel model(cfg, 1);
  test::jitter(model.parameters(), rng);
  auto& gp = model.gcl_params();
  std::vector<test::GradCheck> all;
  auto record = [&](const std::string& label, const std::vector<test::GradCheck>& checks) {
    for (auto c : checks) {
      c.name = label + ":" + c.name;
      all.push_back(c);
    }
  };

  {
    auto x = test::random_tensor(8, cfg.gcl.d_c, rng);
    test::Projection p(8, cfg.gcl.d_f, rng);
    record("reduce_visual",
           test::check_gradients([&] { return p(gcl::reduce_visual(x, gp)); },
                                 {{"x", x}, {"W_f1", gp.W_f1}, {"b_f1", gp.b_f1}, {"W_f2", gp.W_f2}, {"b_f2", gp.b_f2}}));
  }
  {
    auto x = test::random_tensor(8, cfg.gcl.d_f, rng);
    test::Projection p(8, cfg.gcl.d_f, rng);
    nn::ParameterSet gset;
    gp.collect(gset);
    auto wrt = test::named(gset, "gcl.block");
    wrt.emplace_back("x", x);
    record("gcl_block x2", test::check_gradients(
                               [&] {
                                 auto h = gcl::gcl_block(x, gp.blocks[0], cfg.gcl.k, nn::Mode::train);
                                 return p(gcl::gcl_block(h, gp.blocks[1], cfg.gcl.k, nn::Mode::train));
                               },
                               wrt));
  }
  {
    std::vector<std::vector<ItemFeatures>> cols{random_collection(rng, 4, cfg), random_collection(rng, 2, cfg)};
    auto batch = pad_left(cols, cfg.gcl.k);
    test::Projection p(2 * cfg.gcl.k, cfg.fcl.d_y, rng);
    nn::ParameterSet fset;
    model.fcl_params().collect(fset);
    record("fcl_forward", test::check_gradients(
                              [&] { return p(fcl::fcl_forward(batch, model.fcl_params(), cfg.fcl)); },
                              test::named(fset)));
  }
  {
    auto& head = model.head();
    auto g = test::random_tensor(8, cfg.gcl.d_f, rng);
    auto f = test::random_tensor(8, cfg.fcl.d_y, rng);
    test::Projection p(2, cfg.gcl.d_f, rng);
    record("predict_embedding",
           test::check_gradients([&] { return p(recommender::predict_embedding(g, f, cfg.gcl.k, head)); },
                                 {{"G", g}, {"F", f}, {"W_h", head.W_h}, {"b_h", head.b_h}}));
  }
  {
    auto pred = test::random_tensor(3, cfg.gcl.d_f, rng);
    auto cands = test::random_tensor(6, cfg.gcl.d_f, rng);
    const std::vector<Eigen::Index> targets{2, 5, 0};
    record("loss", test::check_gradients(
                       [&] { return recommender::loss(recommender::candidate_logits(pred, cands), targets); },
                       {{"predictions", pred}, {"candidates", cands}}));
  }

  const auto w = *std::max_element(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.relative_error < b.relative_error;
  });
  const double secs = seconds_since(t0);
  return {w.relative_error <= 1e-4 && secs < 60,
          fmt("%zu tensors, worst rel err %.2e (%s), %.1fs", all.size(), w.relative_error, w.name.c_str(), secs)};
}

// ---------------------------------------------------------------------------

Outcome attention_invariants() {
  double worst = 0.0;
  double min_entry = 1.0;
  std::size_t matrices = 0;
  auto check = [&](const MatrixD& m) {
    ++matrices;
    worst = std::max(worst, (m.rowwise().sum().array() - 1.0).abs().maxCoeff());
    min_entry = std::min(min_entry, m.minCoeff());
  };
  for (int t = 0; t < 100; ++t) {
    nn::Rng rng(5000 + static_cast<std::uint64_t>(t));
    ModelConfig cfg;
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
    cfg.gcl = {.d_c = 10, .d_f = 8, .heads = 2, .blocks = 2, .k = k};
    cfg.fcl = {.d_region = 6, .d_y = 8, .heads = 4};
    CannModel model(cfg, static_cast<std::uint64_t>(t));
    test::jitter(model.parameters(), rng, 1.0);
    const double scale = std::pow(10.0, rng.uniform01() * 2.0 - 1.0);
    std::vector<std::vector<ItemFeatures>> cols;
    const int n_cols = 1 + static_cast<int>(rng.uniform_index(3));
    for (int c = 0; c < n_cols; ++c)
      cols.push_back(random_collection(rng, 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k))), cfg,
                                       scale));
    ModelTrace trace;
    model.embed(pad_left(cols, k), t % 2 ? nn::Mode::eval : nn::Mode::train, &trace);
    for (const auto& block : trace.gcl.attention)
      for (const auto& head : block)
        for (const auto& m : head) check(m);
    for (const auto& head : trace.fcl.within)
      for (const auto& m : head) check(m);
    for (const auto& head : trace.fcl.across)
      for (const auto& m : head) check(m);
  }
  return {worst <= 1e-9 && min_entry >= 0.0,
          fmt("%zu matrices, max |row sum - 1| %.1e, min entry %.2e", matrices, worst, min_entry)};
}

// ---------------------------------------------------------------------------

std::vector<int> equal_color_components(const regions::RgbImage& img) {
  std::vector<int> labels(static_cast<std::size_t>(img.area()), -1);
  int next = 0;
  for (int start = 0; start < img.area(); ++start) {
    if (labels[start] >= 0) continue;
    std::queue<int> q;
    q.push(start);
    labels[start] = next;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      const int x = p % img.width, y = p / img.width;
      const int nx[4] = {x - 1, x + 1, x, x}, ny[4] = {y, y, y - 1, y + 1};
      for (int i = 0; i < 4; ++i) {
        if (nx[i] < 0 || ny[i] < 0 || nx[i] >= img.width || ny[i] >= img.height) continue;
        const int n = ny[i] * img.width + nx[i];
        if (labels[n] >= 0) continue;
        bool same = true;
        for (int c = 0; c < 3; ++c) same = same && img.at(x, y, c) == img.at(nx[i], ny[i], c);
        if (!same) continue;
        labels[n] = next;
        q.push(n);
      }
    }
    ++next;
  }
  return labels;
}

Outcome segmentation_oracle() {
  const auto t0 = Clock::now();
  auto half = regions::RgbImage::filled(8, 8, 0, 0, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x) half.set(x, y, 255, 255, 255);
  regions::RgbImage quad(8, 8);
  const std::uint8_t colors[4][3] = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 0}};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const auto* c = colors[(y >= 4) * 2 + (x >= 4)];
      quad.set(x, y, c[0], c[1], c[2]);
    }
  const regions::SegmentationConfig exact{.felz_k = 1.0, .sigma = 0.0, .min_size = 1, .regions_per_mode = 3};
  bool ok = true;
  std::string counts;
  for (const auto* img : {&half, &quad}) {
    const auto labels = regions::segment_labels(*img, exact);
    const auto regs = regions::felzenszwalb_segment(*img, exact);
    ok = ok && labels.labels == equal_color_components(*img) && regs.size() == static_cast<std::size_t>(labels.count);
    counts += (counts.empty() ? "" : "/") + std::to_string(labels.count);
  }
  const double secs = seconds_since(t0);
  return {ok && counts == "2/4" && secs < 1.0, "segments " + counts + fmt(", %.3fs", secs)};
}

// ---------------------------------------------------------------------------

Outcome histogram_contract() {
  double worst = 0.0;
  bool lengths = true;
  std::size_t regions_seen = 0, merges = 0;
  auto check = [&](const regions::Region& r) {
    lengths = lengths && r.color.size() == 75 && r.texture.size() == 240;
    worst = std::max({worst, std::abs(r.color.sum() - 1.0), std::abs(r.texture.sum() - 1.0)});
    lengths = lengths && r.color.minCoeff() >= 0 && r.texture.minCoeff() >= 0;
  };
  nn::Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    regions::RgbImage img(16 + static_cast<int>(rng.uniform_index(24)), 16 + static_cast<int>(rng.uniform_index(24)));
    for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    const regions::SegmentationConfig cfg{.felz_k = 80, .sigma = 0.8, .min_size = 8, .regions_per_mode = 3};
    auto regs = regions::felzenszwalb_segment(img, cfg);
    for (const auto& r : regs) check(r), ++regions_seen;
    auto adjacency = regions::adjacent_labels(regions::segment_labels(img, cfg));
    for (const auto& [a, b] : adjacency) {
      check(regions::merge(regs[static_cast<std::size_t>(a)], regs[static_cast<std::size_t>(b)]));
      ++merges;
    }
  }

  regions::Region a, b;
  for (int i = 0; i < 10; ++i) a.pixels.push_back(i);
  for (int i = 10; i < 40; ++i) b.pixels.push_back(i);
  a.bbox = regions::bounding_box(a.pixels, 100);
  b.bbox = regions::bounding_box(b.pixels, 100);
  a.color(0) = 1.0;
  b.color(1) = 1.0;
  a.texture(0) = b.texture(0) = 1.0;
  const auto m = regions::merge(a, b);
  const bool example = m.size() == 40 && m.color(0) == 0.25 && m.color(1) == 0.75;

  return {lengths && worst <= 1e-9 && example,
          fmt("%zu regions, %zu merges, max |L1 - 1| %.1e, size-10/30 merge [%g, %g]", regions_seen, merges, worst,
              m.color(0), m.color(1))};
}

// ---------------------------------------------------------------------------

struct Synthetic {
  std::vector<io::OutfitRecord> outfits;
  io::FeatureStore global, regions;
};

Synthetic synthetic(int n_outfits, int items, Eigen::Index d_c, Eigen::Index d_region, std::uint64_t seed) {
  Synthetic s{test::synthetic_outfits(n_outfits, items), {}, {}};
  const auto ids = test::item_ids(s.outfits);
  s.global = io::stub_features(ids, d_c, seed);
  s.regions = io::stub_region_features(ids, d_region, seed);
  return s;
}

Outcome overfit_surrogate() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.gcl = {.d_c = 64, .d_f = 32, .heads = 2, .blocks = 2, .k = 4};
  cfg.fcl = {.d_region = 64, .d_y = 16, .heads = 4};
  auto s = synthetic(16, 4, cfg.gcl.d_c, cfg.fcl.d_region, 7);
  train::Dataset data(s.outfits, s.global, s.regions);

  train::TrainConfig tc;
  tc.k = 4;
  tc.epochs = 60;
  tc.batch_size = 9;
  tc.steps_per_epoch = 20;
  tc.decay_every_epochs = 20;
  tc.rng_seed = 1;
  CannModel model(cfg, 1);
  auto result = train::train(data, model, tc);

  nn::Rng rng(3);
  const auto questions = eval::build_fitb_random(s.outfits, 4, rng);
  const auto report = eval::evaluate(questions, model, s.global, s.regions);
  const double secs = seconds_since(t0);
  return {result.log.size() >= 50 && report.accuracy >= 0.95 && secs < 300,
          fmt("%zu epochs, loss %.3f -> %.3f, train FITB acc %.4f over %zu questions, %.1fs", result.log.size(),
              result.log.front().mean_loss, result.log.back().mean_loss, report.accuracy, report.n_questions, secs)};
}

// ---------------------------------------------------------------------------

Outcome null_model() {
  ModelConfig cfg;
  cfg.gcl = {.d_c = 64, .d_f = 32, .heads = 2, .blocks = 2, .k = 4};
  cfg.fcl = {.d_region = 64, .d_y = 16, .heads = 4};
  auto s = synthetic(300, 4, cfg.gcl.d_c, cfg.fcl.d_region, 11);
  CannModel model(cfg, 12);
  nn::Rng rng(13);
  const auto questions = eval::build_fitb_random(s.outfits, 4, rng);
  const auto report = eval::evaluate(questions, model, s.global, s.regions);
  const bool ok = questions.size() >= 1000 && std::abs(report.accuracy - 0.25) <= 0.05 &&
                  std::abs(report.mrr - 0.521) <= 0.05;
  return {ok, fmt("%zu questions, acc %.4f, MRR %.4f", report.n_questions, report.accuracy, report.mrr)};
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  const std::vector<std::size_t> example{1, 1, 2, 4};
  const auto m = eval::metrics(example);
  bool ok = m.accuracy == 0.5 && m.mrr == 0.6875;
  nn::Rng rng(99);
  int agree = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::size_t> ranks(1 + rng.uniform_index(64));
    for (auto& r : ranks) r = 1 + rng.uniform_index(8);
    std::size_t hits = 0;
    double rr = 0.0;
    for (auto r : ranks) {
      hits += r == 1;
      rr += 1.0 / static_cast<double>(r);
    }
    const auto got = eval::metrics(ranks);
    const double n = static_cast<double>(ranks.size());
    agree += got.accuracy == static_cast<double>(hits) / n && got.mrr == rr / n;
  }
  ok = ok && agree == 1000;
  return {ok, fmt("metrics([1,1,2,4]) = (%g, %g), %d/1000 random lists agree", m.accuracy, m.mrr, agree)};
}

// ---------------------------------------------------------------------------

Outcome schedule_conformance() {
  train::TrainConfig cfg;
  const double expected[] = {0.2, 0.2, 0.1, 0.1, 0.05};
  bool ok = true;
  std::string got;
  for (int e = 0; e < 5; ++e) {
    const double lr = train::lr_schedule(e, cfg);
    ok = ok && lr == expected[e];
    got += (e ? " / " : "") + fmt("%g", lr);
  }
  return {ok, got};
}

// ---------------------------------------------------------------------------

std::string batch_bytes(const train::TrainingBatch& b) {
  std::ostringstream out;
  for (auto i : b.outfit_indices) out << i << ',';
  out << '|';
  for (const auto& seed : b.seeds) {
    for (const auto& id : seed) out << id << ',';
    out << ';';
  }
  for (const auto& t : b.targets) out << t << ',';
  out << '|';
  for (const auto& c : b.candidates) out << c << ',';
  out << '|';
  for (auto i : b.target_index) out << i << ',';
  return out.str();
}

Outcome determinism() {
  test::Workdir dir("acceptance");
  test::write_image_outfits(dir.path, 5, 4, 21);
  const std::string d = dir.path.string() + "/";
  const std::string outfits = d + "outfits.jsonl";
  const auto log = dir / "log.txt";
  const std::string dims = " --d-c 12 --d-f 8 --heads 2 --blocks 1 --k 4 --d-region 6 --d-y 4 --focal-heads 2";
  const std::string features = " --features " + d + "g.jsonl --region-features " + d + "r.jsonl";

  std::vector<std::string> failed;
  auto run = [&](const std::string& args) {
    if (test::run_cli(args, log) != 0) failed.push_back(args.substr(0, args.find(' ')) + " exited nonzero");
  };
  run("stub-features --outfits " + outfits + " --dim 12 --region-dim 6 --out " + d + "g.jsonl --regions-out " + d +
      "r.jsonl");
  run("train --outfits " + outfits + features + dims + " --epochs 2 --batch-size 4 --out " + d + "m.ckpt");
  for (const char* tag : {"1", "2"}) {
    const std::string t = tag;
    run("extract-regions --outfits " + outfits + " --images-root " + d + " --out " + d + "crops" + t);
    run("build-fitb --outfits " + outfits + " --seed 5 --out " + d + "q" + t + ".jsonl");
    run("build-fitb --outfits " + outfits + " --mode category --seed 5 --out " + d + "qc" + t + ".jsonl");
    run("evaluate --checkpoint " + d + "m.ckpt --questions " + d + "q1.jsonl" + features + " --report " + d +
        "report" + t + ".json --ranks " + d + "ranks" + t + ".csv");
  }
  if (!failed.empty()) return {false, failed.front()};

  auto s = synthetic(10, 5, 12, 6, 3);
  train::Dataset data(s.outfits, s.global, s.regions);
  train::TrainConfig tc;
  tc.k = 4;
  nn::Rng ra(8), rb(8);
  bool batches_same = true;
  for (int i = 0; i < 20; ++i) batches_same = batches_same && batch_bytes(train::build_batch(data, tc, ra)) ==
                                                                   batch_bytes(train::build_batch(data, tc, rb));

  const bool crops = test::tree_digest(dir / "crops1") == test::tree_digest(dir / "crops2") &&
                     !fs::is_empty(dir / "crops1");
  const bool fitb = test::slurp(dir / "q1.jsonl") == test::slurp(dir / "q2.jsonl") &&
                    test::slurp(dir / "qc1.jsonl") == test::slurp(dir / "qc2.jsonl");
  const bool reports = test::slurp(dir / "report1.json") == test::slurp(dir / "report2.json") &&
                       test::slurp(dir / "ranks1.csv") == test::slurp(dir / "ranks2.csv");
  const auto yn = [](bool b) { return b ? "identical" : "DIFFERENT"; };
  return {crops && fitb && reports && batches_same,
          fmt("extract-regions %s, build-fitb %s, build_batch %s, eval report %s", yn(crops), yn(fitb),
              yn(batches_same), yn(reports))};
}

// ---------------------------------------------------------------------------

Outcome checkpoint_round_trip() {
  ModelConfig cfg;
  cfg.gcl = {.d_c = 16, .d_f = 8, .heads = 2, .blocks = 2, .k = 4};
  cfg.fcl = {.d_region = 6, .d_y = 8, .heads = 2};
  auto s = synthetic(8, 4, cfg.gcl.d_c, cfg.fcl.d_region, 4);
  train::Dataset data(s.outfits, s.global, s.regions);
  train::TrainConfig tc;
  tc.k = 4;
  tc.epochs = 2;
  tc.batch_size = 4;
  CannModel model(cfg, 9);
  train::train(data, model, tc);  // moves weights and batch-norm statistics away from init

  nn::Rng rng(10);
  std::vector<std::vector<ItemFeatures>> cols{random_collection(rng, 3, cfg), random_collection(rng, 1, cfg)};
  const auto batch = pad_left(cols, cfg.gcl.k);
  const MatrixD cands = test::random_matrix(5, cfg.gcl.d_c, rng);
  const MatrixD before = model.embed(batch, nn::Mode::eval).value();
  const MatrixD cand_before = model.candidate_embeddings(cands).value();

  test::Workdir dir("ckpt");
  io::save_checkpoint(model, dir / "m.ckpt");
  auto loaded = io::load_checkpoint(dir / "m.ckpt");
  const MatrixD after = loaded.embed(batch, nn::Mode::eval).value();
  const MatrixD cand_after = loaded.candidate_embeddings(cands).value();
  const bool same = before.size() == after.size() &&
                    std::memcmp(before.data(), after.data(), sizeof(double) * before.size()) == 0 &&
                    std::memcmp(cand_before.data(), cand_after.data(), sizeof(double) * cand_before.size()) == 0;
  return {same, fmt("%lldx%lld embedding + %lldx%lld candidates, bitwise %s", static_cast<long long>(after.rows()),
                    static_cast<long long>(after.cols()), static_cast<long long>(cand_after.rows()),
                    static_cast<long long>(cand_after.cols()), same ? "equal" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"attention invariants", attention_invariants},
      {"segmentation oracle", segmentation_oracle},
      {"histogram contract", histogram_contract},
      {"overfit surrogate", overfit_surrogate},
      {"null-model calibration", null_model},
      {"metric oracle", metric_oracle},
      {"schedule conformance", schedule_conformance},
      {"determinism", determinism},
      {"checkpoint round-trip", checkpoint_round_trip},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
