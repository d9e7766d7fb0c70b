#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cann/io/features.hpp"
#include "cann/io/outfits.hpp"
#include "cann/model/cann_model.hpp"

namespace cann::eval {

struct FitbQuestion {
  std::string question_id;
  std::vector<std::string> seed_items;  // outfit order, blank removed
  int blank_position = 0;               // index of the blank in the original outfit
  std::vector<std::string> candidates;
  int answer_index = 0;

  bool operator==(const FitbQuestion&) const = default;
};

struct FitbSet {
  std::vector<FitbQuestion> questions;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// One question per (outfit, item). Negatives come uniformly from the test
/// items outside the outfit; candidate order is shuffled.
std::vector<FitbQuestion> build_fitb_random(std::span<const io::OutfitRecord> outfits, int n_candidates,
                                            nn::Rng& rng);

/// As build_fitb_random, but negatives share the ground truth's category.
/// Questions whose category pool is too small are skipped and counted.
FitbSet build_fitb_category(std::span<const io::OutfitRecord> outfits, int n_candidates, nn::Rng& rng);

/// Throws InputError unless the question is well formed.
void validate_question(const FitbQuestion& q);

/// 1-based rank of the ground truth under the model's scoring.
std::size_t answer(const FitbQuestion& q, CannModel& model, const io::FeatureStore& global,
                   const io::FeatureStore& regions);

struct EvalReport {
  double accuracy = 0.0;
  double mrr = 0.0;
  std::size_t n_questions = 0;
  std::vector<std::size_t> ranks;
};

/// Accuracy = share of rank 1; MRR = mean of 1/rank.
EvalReport metrics(std::span<const std::size_t> ranks);

/// Answers every question in order.
EvalReport evaluate(std::span<const FitbQuestion> questions, CannModel& model, const io::FeatureStore& global,
                    const io::FeatureStore& regions);

void write_questions(std::ostream& out, std::span<const FitbQuestion> questions);
std::vector<FitbQuestion> load_questions(const std::filesystem::path& path);

/// {"accuracy", "mrr", "n_questions"}.
void write_report_json(std::ostream& out, const EvalReport& report);
/// `question_id,rank` rows.
void write_ranks_csv(std::ostream& out, std::span<const FitbQuestion> questions, const EvalReport& report);

}  // namespace cann::eval
