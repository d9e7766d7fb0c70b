// Command-line front end: region extraction, training, FITB construction,
// evaluation, prediction, and attention export.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "cann/eval/fitb.hpp"
#include "cann/io/checkpoint.hpp"
#include "cann/io/config.hpp"
#include "cann/io/features.hpp"
#include "cann/io/outfits.hpp"
#include "cann/io/png.hpp"
#include "cann/regions/grouping.hpp"
#include "cann/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace cann;

namespace {

void print_warnings(const io::Diagnostics& diag) {
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::vector<std::string> all_item_ids(const std::vector<io::OutfitRecord>& outfits) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& o : outfits)
    for (const auto& item : o.items)
      if (seen.insert(item.item_id).second) ids.push_back(item.item_id);
  return ids;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

/// Model dimension flags. Unset flags keep the config/checkpoint value.
struct DimFlags {
  std::optional<long> d_c, d_f, heads, blocks, k, d_region, d_y, focal_heads;

  void add(CLI::App* app) {
    app->add_option("--d-c", d_c, "raw item feature width");
    app->add_option("--d-f", d_f, "reduced embedding width");
    app->add_option("--heads", heads, "global attention heads S");
    app->add_option("--blocks", blocks, "stacked attention blocks");
    app->add_option("--k", k, "collection length after padding");
    app->add_option("--d-region", d_region, "raw region feature width");
    app->add_option("--d-y", d_y, "focal working width");
    app->add_option("--focal-heads", focal_heads, "focal attention heads");
  }

  void apply(ModelConfig& cfg) const {
    if (d_c) cfg.gcl.d_c = *d_c;
    if (d_f) cfg.gcl.d_f = *d_f;
    if (heads) cfg.gcl.heads = *heads;
    if (blocks) cfg.gcl.blocks = *blocks;
    if (k) cfg.gcl.k = *k;
    if (d_region) cfg.fcl.d_region = *d_region;
    if (d_y) cfg.fcl.d_y = *d_y;
    if (focal_heads) cfg.fcl.heads = *focal_heads;
  }

  /// Any flag that disagrees with a loaded checkpoint is an error.
  void check_against(const ModelConfig& cfg) const {
    auto check = [](const std::optional<long>& flag, Eigen::Index actual, const char* name) {
      if (flag && *flag != actual)
        throw InputError(std::string("--") + name + "=" + std::to_string(*flag) + " conflicts with the checkpoint (" +
                         std::to_string(actual) + ")");
    };
    check(d_c, cfg.gcl.d_c, "d-c");
    check(d_f, cfg.gcl.d_f, "d-f");
    check(heads, cfg.gcl.heads, "heads");
    check(blocks, cfg.gcl.blocks, "blocks");
    check(k, cfg.gcl.k, "k");
    check(d_region, cfg.fcl.d_region, "d-region");
    check(d_y, cfg.fcl.d_y, "d-y");
    check(focal_heads, cfg.fcl.heads, "focal-heads");
  }
};

struct FeatureFlags {
  std::string global;
  std::string regions;

  void add(CLI::App* app) {
    app->add_option("--features", global, "item feature file (JSON lines or binary)")->required();
    app->add_option("--region-features", regions, "region feature file; defaults to --features");
  }

  std::pair<io::FeatureStore, io::FeatureStore> load() const {
    io::Diagnostics diag;
    auto g = io::load_features(global, &diag);
    auto r = regions.empty() || regions == global ? g : io::load_features(regions, &diag);
    print_warnings(diag);
    return {std::move(g), std::move(r)};
  }
};

CannModel load_model(const std::string& path, const DimFlags& dims) {
  auto model = io::load_checkpoint(path);
  dims.check_against(model.config());
  return model;
}

void write_matrix_csv(const fs::path& path, const nn::MatrixD& m) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-attentive complementary item recommender"};
  app.require_subcommand(1);

  // stub-features
  auto* stub = app.add_subcommand("stub-features", "write deterministic pseudo-random feature files");
  std::string stub_outfits, stub_out, stub_regions_out, stub_format = "json";
  long stub_dim = 2048, stub_region_dim = 0;
  std::uint64_t stub_seed = 7;
  stub->add_option("--outfits", stub_outfits, "outfits file")->required();
  stub->add_option("--dim", stub_dim, "item feature width");
  stub->add_option("--region-dim", stub_region_dim, "region feature width (default: --dim)");
  stub->add_option("--seed", stub_seed, "generator seed");
  stub->add_option("--out", stub_out, "item feature output")->required();
  stub->add_option("--regions-out", stub_regions_out, "region feature output (default: into --out)");
  stub->add_option("--format", stub_format, "json or binary")->check(CLI::IsMember({"json", "binary"}));

  // extract-regions
  auto* extract = app.add_subcommand("extract-regions", "write semantic-focal region crops per item image");
  std::string ex_outfits, ex_images_root, ex_out, ex_image, ex_item;
  double ex_k = 100.0, ex_sigma = 0.8;
  int ex_min_size = 50, ex_per_mode = 3;
  bool ex_no_scale = false;
  extract->add_option("--outfits", ex_outfits, "outfits file naming item images");
  extract->add_option("--images-root", ex_images_root, "directory image paths are relative to");
  extract->add_option("--image", ex_image, "single PNG image (with --item-id)");
  extract->add_option("--item-id", ex_item, "item id for --image");
  extract->add_option("--out", ex_out, "crop output directory")->required();
  extract->add_option("--felz-k", ex_k, "segmentation merge threshold");
  extract->add_option("--sigma", ex_sigma, "pre-smoothing Gaussian std");
  extract->add_option("--min-size", ex_min_size, "minimum segment size");
  extract->add_option("--regions-per-mode", ex_per_mode, "crops per semantic mode");
  extract->add_flag("--no-scale", ex_no_scale, "do not shrink min-size for small images");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model with the compositional strategy");
  std::string tr_outfits, tr_validation, tr_out, tr_log, tr_config;
  FeatureFlags tr_features;
  DimFlags tr_dims;
  std::optional<int> tr_epochs, tr_batch, tr_decay_every, tr_steps;
  std::optional<double> tr_lr, tr_decay;
  std::optional<std::uint64_t> tr_seed;
  bool tr_no_early_stop = false;
  train_cmd->add_option("--outfits", tr_outfits, "training outfits")->required();
  train_cmd->add_option("--validation", tr_validation, "validation outfits for early stopping");
  tr_features.add(train_cmd);
  train_cmd->add_option("--config", tr_config, "run config JSON");
  tr_dims.add(train_cmd);
  train_cmd->add_option("--epochs", tr_epochs, "epochs T");
  train_cmd->add_option("--batch-size", tr_batch, "batch size m");
  train_cmd->add_option("--lr", tr_lr, "initial learning rate");
  train_cmd->add_option("--decay-factor", tr_decay, "learning-rate decay factor");
  train_cmd->add_option("--decay-every", tr_decay_every, "epochs between decays");
  train_cmd->add_option("--steps-per-epoch", tr_steps, "batches per epoch (0: outfits / m)");
  train_cmd->add_option("--seed", tr_seed, "seed for initialization and sampling");
  train_cmd->add_flag("--no-early-stop", tr_no_early_stop, "ignore validation stabilization");
  train_cmd->add_option("--out", tr_out, "checkpoint output")->required();
  train_cmd->add_option("--loss-log", tr_log, "per-epoch loss CSV");

  // build-fitb
  auto* fitb = app.add_subcommand("build-fitb", "build fill-in-the-blank questions");
  std::string fb_outfits, fb_out, fb_mode = "random";
  int fb_candidates = 4;
  std::uint64_t fb_seed = 0;
  fitb->add_option("--outfits", fb_outfits, "test outfits")->required();
  fitb->add_option("--mode", fb_mode, "random or category")->check(CLI::IsMember({"random", "category"}));
  fitb->add_option("--n-candidates", fb_candidates, "candidates per question");
  fitb->add_option("--seed", fb_seed, "construction seed");
  fitb->add_option("--out", fb_out, "question file")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "answer FITB questions and report ACC/MRR");
  std::string ev_ckpt, ev_questions, ev_report, ev_ranks;
  FeatureFlags ev_features;
  DimFlags ev_dims;
  evaluate->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  evaluate->add_option("--questions", ev_questions, "question file")->required();
  ev_features.add(evaluate);
  ev_dims.add(evaluate);
  evaluate->add_option("--report", ev_report, "report JSON (default: stdout)");
  evaluate->add_option("--ranks", ev_ranks, "per-question rank CSV");

  // predict
  auto* predict = app.add_subcommand("predict", "rank candidates for seed collections");
  std::string pr_ckpt, pr_questions, pr_seed_items, pr_candidates, pr_out;
  FeatureFlags pr_features;
  DimFlags pr_dims;
  predict->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  pr_features.add(predict);
  pr_dims.add(predict);
  predict->add_option("--questions", pr_questions, "question file to rank");
  predict->add_option("--seed-items", pr_seed_items, "comma-separated seed item ids");
  predict->add_option("--candidates", pr_candidates, "comma-separated candidate item ids");
  predict->add_option("--out", pr_out, "ranked records (default: stdout)");

  // inspect-attention
  auto* inspect = app.add_subcommand("inspect-attention", "export coherence matrices as CSV");
  std::string ia_ckpt, ia_seed_items, ia_out;
  FeatureFlags ia_features;
  DimFlags ia_dims;
  inspect->add_option("--checkpoint", ia_ckpt, "model checkpoint")->required();
  ia_features.add(inspect);
  ia_dims.add(inspect);
  inspect->add_option("--seed-items", ia_seed_items, "comma-separated item ids")->required();
  inspect->add_option("--out-dir", ia_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stub) {
      io::Diagnostics diag;
      const auto outfits = io::load_outfits(stub_outfits, &diag);
      print_warnings(diag);
      const auto ids = all_item_ids(outfits);
      const auto format = stub_format == "binary" ? io::FeatureFormat::binary : io::FeatureFormat::json_lines;
      const long region_dim = stub_region_dim > 0 ? stub_region_dim : stub_dim;
      auto store = io::stub_features(ids, stub_dim, stub_seed);
      auto region_store = io::stub_region_features(ids, region_dim, stub_seed);
      if (!stub_regions_out.empty()) {
        io::save_features(stub_regions_out, region_store, format);
      } else {
        // one file serves as both --features and --region-features
        if (region_dim != stub_dim) throw InputError("--region-dim differs from --dim; pass --regions-out");
        store.regions = std::move(region_store.regions);
      }
      io::save_features(stub_out, store, format);
      std::cout << "wrote features for " << ids.size() << " items\n";
    } else if (*extract) {
      regions::SegmentationConfig seg{ex_k, ex_sigma, ex_min_size, ex_per_mode};
      seg.validate();
      std::vector<std::pair<std::string, fs::path>> jobs;
      if (!ex_image.empty()) {
        if (ex_item.empty()) throw InputError("--image needs --item-id");
        jobs.emplace_back(ex_item, ex_image);
      } else if (!ex_outfits.empty()) {
        io::Diagnostics diag;
        const auto outfits = io::load_outfits(ex_outfits, &diag);
        print_warnings(diag);
        std::set<std::string> seen;
        for (const auto& o : outfits)
          for (const auto& item : o.items)
            if (seen.insert(item.item_id).second) {
              if (item.image.empty()) throw InputError("item '" + item.item_id + "' has no image path");
              jobs.emplace_back(item.item_id, fs::path(ex_images_root) / item.image);
            }
      } else {
        throw InputError("extract-regions needs --outfits or --image");
      }
      fs::create_directories(ex_out);
      std::size_t written = 0;
      for (const auto& [item_id, image_path] : jobs) {
        const auto img = io::read_png(image_path);
        const auto cfg = ex_no_scale ? seg : seg.scaled_for(img.width, img.height);
        for (const auto& content : regions::extract_all_modes(img, cfg))
          for (std::size_t r = 0; r < content.crops.size(); ++r) {
            io::write_png(fs::path(ex_out) / (item_id + "." + std::string(regions::to_string(content.mode)) + "." +
                                              std::to_string(r) + ".png"),
                          content.crops[r]);
            ++written;
          }
      }
      std::cout << "wrote " << written << " crops for " << jobs.size() << " items\n";
    } else if (*train_cmd) {
      io::RunConfig cfg = tr_config.empty() ? io::RunConfig{} : io::load_run_config(tr_config);
      tr_dims.apply(cfg.model);
      cfg.train.k = static_cast<int>(cfg.model.gcl.k);
      if (tr_epochs) cfg.train.epochs = *tr_epochs;
      if (tr_batch) cfg.train.batch_size = *tr_batch;
      if (tr_lr) cfg.train.lr0 = *tr_lr;
      if (tr_decay) cfg.train.decay_factor = *tr_decay;
      if (tr_decay_every) cfg.train.decay_every_epochs = *tr_decay_every;
      if (tr_steps) cfg.train.steps_per_epoch = *tr_steps;
      if (tr_seed) cfg.seed = *tr_seed;
      if (tr_no_early_stop) cfg.train.early_stop = false;
      cfg.train.rng_seed = cfg.seed;
      cfg.validate();

      io::Diagnostics diag;
      auto outfits = io::load_outfits(tr_outfits, &diag);
      print_warnings(diag);
      const auto [global, region_store] = tr_features.load();
      train::Dataset data(std::move(outfits), global, region_store);
      std::optional<train::Dataset> validation;
      if (!tr_validation.empty()) validation.emplace(io::load_outfits(tr_validation), global, region_store);

      CannModel model(cfg.model, cfg.seed);
      auto result = train::train(data, model, cfg.train, validation ? &*validation : nullptr,
                                 [](const train::EpochLog& e) {
                                   std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << " lr " << e.lr;
                                   if (e.validation_loss) std::cerr << " val " << *e.validation_loss;
                                   std::cerr << '\n';
                                 });
      io::save_checkpoint(model, tr_out);
      if (!tr_log.empty()) {
        auto out = open_out(tr_log);
        train::write_loss_log(out, result.log);
      }
      std::cout << "trained " << result.log.size() << " epochs" << (result.stopped_early ? " (early stop)" : "")
                << ", checkpoint " << tr_out << '\n';
    } else if (*fitb) {
      io::Diagnostics diag;
      const auto outfits = io::load_outfits(fb_outfits, &diag);
      print_warnings(diag);
      nn::Rng rng(fb_seed);
      std::vector<eval::FitbQuestion> questions;
      std::size_t skipped = 0;
      if (fb_mode == "random") {
        questions = eval::build_fitb_random(outfits, fb_candidates, rng);
      } else {
        auto set = eval::build_fitb_category(outfits, fb_candidates, rng);
        for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
        questions = std::move(set.questions);
        skipped = set.skipped;
      }
      auto out = open_out(fb_out);
      eval::write_questions(out, questions);
      std::cout << nlohmann::json{{"questions", questions.size()}, {"skipped", skipped}}.dump() << '\n';
    } else if (*evaluate) {
      auto model = load_model(ev_ckpt, ev_dims);
      const auto [global, region_store] = ev_features.load();
      const auto questions = eval::load_questions(ev_questions);
      const auto report = eval::evaluate(questions, model, global, region_store);
      if (ev_report.empty()) {
        eval::write_report_json(std::cout, report);
      } else {
        auto out = open_out(ev_report);
        eval::write_report_json(out, report);
      }
      if (!ev_ranks.empty()) {
        auto out = open_out(ev_ranks);
        eval::write_ranks_csv(out, questions, report);
      }
    } else if (*predict) {
      auto model = load_model(pr_ckpt, pr_dims);
      const auto [global, region_store] = pr_features.load();
      std::vector<eval::FitbQuestion> questions;
      if (!pr_questions.empty()) {
        questions = eval::load_questions(pr_questions);
      } else {
        eval::FitbQuestion q;
        q.question_id = "query";
        q.seed_items = split_ids(pr_seed_items);
        q.candidates = split_ids(pr_candidates);
        if (q.seed_items.empty() || q.candidates.size() < 2)
          throw InputError("predict needs --questions, or --seed-items and at least two --candidates");
        questions.push_back(std::move(q));
      }
      std::ostringstream records;
      for (const auto& q : questions) {
        std::vector<ItemFeatures> seed;
        for (const auto& id : q.seed_items) seed.push_back(io::item_features(id, global, region_store));
        nn::MatrixD candidates(static_cast<Eigen::Index>(q.candidates.size()), global.dim);
        for (std::size_t i = 0; i < q.candidates.size(); ++i)
          candidates.row(static_cast<Eigen::Index>(i)) = global.item(q.candidates[i]);
        const auto ranking = model.score_candidates(seed, candidates);
        nlohmann::json ids = nlohmann::json::array(), probs = nlohmann::json::array();
        for (auto i : ranking.order) {
          ids.push_back(q.candidates[i]);
          probs.push_back(ranking.probabilities[i]);
        }
        records << nlohmann::json{{"question_id", q.question_id}, {"candidates", ids}, {"probabilities", probs}}.dump()
                << '\n';
      }
      if (pr_out.empty()) {
        std::cout << records.str();
      } else {
        auto out = open_out(pr_out);
        out << records.str();
      }
    } else if (*inspect) {
      auto model = load_model(ia_ckpt, ia_dims);
      const auto [global, region_store] = ia_features.load();
      std::vector<ItemFeatures> seed;
      for (const auto& id : split_ids(ia_seed_items)) seed.push_back(io::item_features(id, global, region_store));
      const std::vector<std::vector<ItemFeatures>> one{seed};
      ModelTrace trace;
      model.embed(pad_left(one, model.config().gcl.k), nn::Mode::eval, &trace);
      const fs::path dir(ia_out);
      fs::create_directories(dir);
      std::size_t files = 0;
      for (std::size_t b = 0; b < trace.gcl.attention.size(); ++b)
        for (std::size_t s = 0; s < trace.gcl.attention[b].size(); ++s, ++files)
          write_matrix_csv(dir / ("gcl_block" + std::to_string(b) + "_head" + std::to_string(s) + ".csv"),
                           trace.gcl.attention[b][s].front());
      for (std::size_t h = 0; h < trace.fcl.within.size(); ++h)
        for (std::size_t i = 0; i < trace.fcl.within[h].size(); ++i, ++files)
          write_matrix_csv(dir / ("fcl_within_item" + std::to_string(i) + "_head" + std::to_string(h) + ".csv"),
                           trace.fcl.within[h][i]);
      for (std::size_t h = 0; h < trace.fcl.across.size(); ++h, ++files)
        write_matrix_csv(dir / ("fcl_across_head" + std::to_string(h) + ".csv"), trace.fcl.across[h].front());
      std::cout << "wrote " << files << " attention matrices to " << dir.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
