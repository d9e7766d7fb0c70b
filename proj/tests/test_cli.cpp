#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cli_support.hpp"

using namespace cann;
using test::run_cli;
using test::slurp;
namespace fs = std::filesystem;

namespace {

const std::string kDims = " --d-c 12 --d-f 8 --heads 2 --blocks 1 --k 4 --d-region 6 --d-y 4 --focal-heads 2";

}  // namespace

TEST_CASE("command line pipeline") {
  test::Workdir dir("cli");
  test::write_image_outfits(dir.path, 6, 4, 11);
  const auto log = dir / "log.txt";
  const std::string outfits = (dir / "outfits.jsonl").string();
  const std::string d = dir.path.string() + "/";

  SUBCASE("region extraction is reproducible") {
    for (const char* tag : {"a", "b"})
      REQUIRE(run_cli("extract-regions --outfits " + outfits + " --images-root " + d + " --out " + d + "crops_" + tag,
                      log) == 0);
    const auto a = test::tree_digest(dir / "crops_a");
    CHECK(a == test::tree_digest(dir / "crops_b"));
    CHECK(fs::exists(dir / "crops_a" / "o0_i0.color.0.png"));
    CHECK(fs::exists(dir / "crops_a" / "o5_i3.hybrid.2.png"));
    CHECK(io::read_png(dir / "crops_a" / "o0_i0.texture.1.png").area() > 0);

    REQUIRE(run_cli("extract-regions --image " + d + "images/o0_i0.png --item-id single --out " + d + "one", log) == 0);
    CHECK(slurp(dir / "one" / "single.color.0.png") == slurp(dir / "crops_a" / "o0_i0.color.0.png"));
  }

  SUBCASE("train, build questions, evaluate") {
    REQUIRE(run_cli("stub-features --outfits " + outfits + " --dim 12 --region-dim 6 --out " + d + "g.jsonl" +
                        " --regions-out " + d + "r.jsonl",
                    log) == 0);
    const std::string features = " --features " + d + "g.jsonl --region-features " + d + "r.jsonl";
    for (const char* tag : {"a", "b"}) {
      REQUIRE(run_cli("train --outfits " + outfits + features + kDims + " --epochs 3 --batch-size 4 --out " + d +
                          "m_" + tag + ".ckpt --loss-log " + d + "loss_" + tag + ".csv",
                      log) == 0);
      REQUIRE(run_cli("build-fitb --outfits " + outfits + " --seed 3 --out " + d + "q_" + tag + ".jsonl", log) == 0);
      CHECK(nlohmann::json::parse(slurp(log)).at("questions") == 24);
      REQUIRE(run_cli("build-fitb --outfits " + outfits + " --mode category --seed 3 --out " + d + "qc_" + tag +
                          ".jsonl",
                      log) == 0);
      REQUIRE(run_cli("evaluate --checkpoint " + d + "m_a.ckpt --questions " + d + "q_" + tag + ".jsonl" + features +
                          " --report " + d + "report_" + tag + ".json --ranks " + d + "ranks_" + tag + ".csv",
                      log) == 0);
    }
    CHECK(slurp(dir / "m_a.ckpt") == slurp(dir / "m_b.ckpt"));
    CHECK(slurp(dir / "loss_a.csv") == slurp(dir / "loss_b.csv"));
    CHECK(slurp(dir / "q_a.jsonl") == slurp(dir / "q_b.jsonl"));
    CHECK(slurp(dir / "qc_a.jsonl") == slurp(dir / "qc_b.jsonl"));
    CHECK(slurp(dir / "report_a.json") == slurp(dir / "report_b.json"));
    CHECK(slurp(dir / "ranks_a.csv") == slurp(dir / "ranks_b.csv"));
    auto report = nlohmann::json::parse(slurp(dir / "report_a.json"));
    CHECK(report.at("n_questions") == 24);

    SUBCASE("dimension flags must agree with the checkpoint") {
      CHECK(run_cli("evaluate --checkpoint " + d + "m_a.ckpt --questions " + d + "q_a.jsonl" + features + " --d-f 16",
                    log) == 1);
      CHECK(slurp(log).find("--d-f=16 conflicts with the checkpoint (8)") != std::string::npos);
      CHECK(run_cli("evaluate --checkpoint " + d + "m_a.ckpt --questions " + d + "q_a.jsonl" + features + kDims, log) ==
            0);
    }
    SUBCASE("predict and attention export") {
      REQUIRE(run_cli("predict --checkpoint " + d + "m_a.ckpt" + features +
                          " --seed-items o0_i0,o0_i1,o0_i2 --candidates o1_i3,o0_i3,o2_i3",
                      log) == 0);
      auto rec = nlohmann::json::parse(slurp(log));
      CHECK(rec.at("candidates").size() == 3);
      CHECK(rec.at("probabilities")[0] >= rec.at("probabilities")[2]);

      REQUIRE(run_cli("inspect-attention --checkpoint " + d + "m_a.ckpt" + features +
                          " --seed-items o0_i0,o0_i1 --out-dir " + d + "att",
                      log) == 0);
      CHECK(fs::exists(dir / "att" / "gcl_block0_head1.csv"));
      CHECK(fs::exists(dir / "att" / "fcl_within_item3_head0.csv"));
      CHECK(fs::exists(dir / "att" / "fcl_across_head1.csv"));
    }
    SUBCASE("missing items are reported") {
      CHECK(run_cli("predict --checkpoint " + d + "m_a.ckpt" + features + " --seed-items nope --candidates o0_i0,o0_i1",
                    log) == 1);
      CHECK(slurp(log).find("nope") != std::string::npos);
    }
  }

  SUBCASE("one stub file serves both feature flags") {
    REQUIRE(run_cli("stub-features --outfits " + outfits + " --dim 12 --format binary --out " + d + "all.bin", log) ==
            0);
    CHECK(run_cli("train --outfits " + outfits + " --features " + d + "all.bin --d-c 12 --d-f 8 --heads 2 --k 4 "
                  "--d-region 12 --d-y 4 --focal-heads 2 --epochs 1 --out " + d + "m.ckpt",
                  log) == 0);
    CHECK(run_cli("stub-features --outfits " + outfits + " --dim 12 --region-dim 6 --out " + d + "x.jsonl", log) == 1);
  }

  SUBCASE("bad invocations exit nonzero") {
    CHECK(run_cli("", log) != 0);
    CHECK(run_cli("train --outfits " + outfits, log) != 0);
    CHECK(run_cli("evaluate --checkpoint " + d + "absent.ckpt --questions x --features y", log) == 1);
    CHECK(slurp(log).rfind("error: ", 0) == 0);
  }
}
