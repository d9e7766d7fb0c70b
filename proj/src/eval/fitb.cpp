#include "cann/eval/fitb.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <thread>

namespace cann::eval {

using nlohmann::json;

namespace {

/// Distinct item ids in first-appearance order with their categories.
struct ItemPool {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::string>> by_category;
};

ItemPool collect_items(std::span<const io::OutfitRecord> outfits) {
  ItemPool pool;
  std::set<std::string> seen;
  for (const auto& o : outfits)
    for (const auto& item : o.items)
      if (seen.insert(item.item_id).second) {
        pool.ids.push_back(item.item_id);
        pool.by_category[item.category].push_back(item.item_id);
      }
  return pool;
}

std::vector<std::string> draw_negatives(const std::vector<std::string>& source, const std::set<std::string>& excluded,
                                        int count, nn::Rng& rng) {
  std::vector<std::string> eligible;
  for (const auto& id : source)
    if (!excluded.count(id)) eligible.push_back(id);
  if (static_cast<int>(eligible.size()) < count) return {};
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.uniform_index(eligible.size() - static_cast<std::size_t>(i));
    std::swap(eligible[static_cast<std::size_t>(i)], eligible[j]);
  }
  eligible.resize(static_cast<std::size_t>(count));
  return eligible;
}

FitbQuestion make_question(const io::OutfitRecord& outfit, std::size_t blank, std::vector<std::string> negatives,
                           nn::Rng& rng) {
  FitbQuestion q;
  q.question_id = outfit.outfit_id + ":" + std::to_string(blank);
  q.blank_position = static_cast<int>(blank);
  for (std::size_t j = 0; j < outfit.items.size(); ++j)
    if (j != blank) q.seed_items.push_back(outfit.items[j].item_id);
  const auto& truth = outfit.items[blank].item_id;
  q.candidates = std::move(negatives);
  q.candidates.push_back(truth);
  rng.shuffle(std::span<std::string>(q.candidates));
  q.answer_index = static_cast<int>(std::find(q.candidates.begin(), q.candidates.end(), truth) - q.candidates.begin());
  return q;
}

std::set<std::string> outfit_ids(const io::OutfitRecord& outfit) {
  std::set<std::string> ids;
  for (const auto& item : outfit.items) ids.insert(item.item_id);
  return ids;
}

}  // namespace

std::vector<FitbQuestion> build_fitb_random(std::span<const io::OutfitRecord> outfits, int n_candidates,
                                            nn::Rng& rng) {
  if (n_candidates < 2) throw InputError("build_fitb_random: need at least 2 candidates");
  const auto pool = collect_items(outfits);
  if (static_cast<int>(pool.ids.size()) < n_candidates)
    throw InputError("build_fitb_random: " + std::to_string(pool.ids.size()) + " distinct items cannot fill " +
                     std::to_string(n_candidates) + " candidates");
  std::vector<FitbQuestion> out;
  for (const auto& outfit : outfits) {
    const auto excluded = outfit_ids(outfit);
    for (std::size_t blank = 0; blank < outfit.items.size(); ++blank) {
      auto negatives = draw_negatives(pool.ids, excluded, n_candidates - 1, rng);
      if (negatives.empty())
        throw InputError("build_fitb_random: not enough items outside outfit '" + outfit.outfit_id + "'");
      out.push_back(make_question(outfit, blank, std::move(negatives), rng));
    }
  }
  return out;
}

FitbSet build_fitb_category(std::span<const io::OutfitRecord> outfits, int n_candidates, nn::Rng& rng) {
  if (n_candidates < 2) throw InputError("build_fitb_category: need at least 2 candidates");
  const auto pool = collect_items(outfits);
  FitbSet out;
  for (const auto& outfit : outfits) {
    const auto excluded = outfit_ids(outfit);
    for (std::size_t blank = 0; blank < outfit.items.size(); ++blank) {
      const auto& truth = outfit.items[blank];
      if (truth.category.empty())
        throw InputError("build_fitb_category: item '" + truth.item_id + "' has no category");
      auto negatives = draw_negatives(pool.by_category.at(truth.category), excluded, n_candidates - 1, rng);
      if (negatives.empty()) {
        ++out.skipped;
        out.warnings.push_back("skipped " + outfit.outfit_id + ":" + std::to_string(blank) + ": category '" +
                               truth.category + "' has fewer than " + std::to_string(n_candidates - 1) +
                               " other items");
        continue;
      }
      out.questions.push_back(make_question(outfit, blank, std::move(negatives), rng));
    }
  }
  return out;
}

void validate_question(const FitbQuestion& q) {
  if (q.candidates.size() < 2) throw InputError("question " + q.question_id + ": fewer than 2 candidates");
  if (q.answer_index < 0 || q.answer_index >= static_cast<int>(q.candidates.size()))
    throw InputError("question " + q.question_id + ": answer index out of range");
  if (std::set<std::string>(q.candidates.begin(), q.candidates.end()).size() != q.candidates.size())
    throw InputError("question " + q.question_id + ": duplicate candidates");
  if (q.seed_items.empty()) throw InputError("question " + q.question_id + ": empty seed");
  if (q.blank_position < 0 || q.blank_position > static_cast<int>(q.seed_items.size()))
    throw InputError("question " + q.question_id + ": blank position out of range");
}

std::size_t answer(const FitbQuestion& q, CannModel& model, const io::FeatureStore& global,
                   const io::FeatureStore& regions) {
  validate_question(q);
  std::vector<ItemFeatures> seed;
  for (const auto& id : q.seed_items) seed.push_back(io::item_features(id, global, regions));
  nn::MatrixD candidates(static_cast<Eigen::Index>(q.candidates.size()), global.dim);
  for (std::size_t i = 0; i < q.candidates.size(); ++i)
    candidates.row(static_cast<Eigen::Index>(i)) = global.item(q.candidates[i]);
  const auto ranking = model.score_candidates(seed, candidates);
  return ranking.rank_of(static_cast<std::size_t>(q.answer_index));
}

EvalReport metrics(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InputError("metrics: no ranks");
  EvalReport r;
  r.n_questions = ranks.size();
  std::size_t hits = 0;
  double reciprocal = 0.0;
  for (auto rank : ranks) {
    if (rank < 1) throw InputError("metrics: ranks are 1-based");
    hits += rank == 1;
    reciprocal += 1.0 / static_cast<double>(rank);
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(ranks.size());
  r.mrr = reciprocal / static_cast<double>(ranks.size());
  r.ranks.assign(ranks.begin(), ranks.end());
  return r;
}

EvalReport evaluate(std::span<const FitbQuestion> questions, CannModel& model, const io::FeatureStore& global,
                    const io::FeatureStore& regions) {
  if (questions.empty()) throw InputError("evaluate: no questions");
  // Eval mode never writes to the model, so workers share it; each owns a
  // strided slice of the rank vector.
  std::vector<std::size_t> ranks(questions.size());
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, questions.size() / 64));
  // First failing question per worker; the lowest index is reported.
  std::vector<std::pair<std::size_t, std::exception_ptr>> errors(workers, {questions.size(), nullptr});
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        std::size_t i = w;
        try {
          for (; i < questions.size(); i += workers) ranks[i] = answer(questions[i], model, global, regions);
        } catch (...) {
          errors[w] = {i, std::current_exception()};
        }
      });
  }
  const auto first = std::min_element(errors.begin(), errors.end(),
                                      [](const auto& a, const auto& b) { return a.first < b.first; });
  if (first->second) std::rethrow_exception(first->second);
  return metrics(ranks);
}

void write_questions(std::ostream& out, std::span<const FitbQuestion> questions) {
  for (const auto& q : questions)
    out << json{{"question_id", q.question_id},
                {"seed_items", q.seed_items},
                {"blank_position", q.blank_position},
                {"candidates", q.candidates},
                {"answer_index", q.answer_index}}
               .dump()
        << '\n';
}

std::vector<FitbQuestion> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open questions file " + path.string());
  std::vector<FitbQuestion> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(line);
      FitbQuestion q{j.at("question_id").get<std::string>(), j.at("seed_items").get<std::vector<std::string>>(),
                     j.at("blank_position").get<int>(), j.at("candidates").get<std::vector<std::string>>(),
                     j.at("answer_index").get<int>()};
      validate_question(q);
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    } catch (const InputError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  out << json{{"accuracy", report.accuracy}, {"mrr", report.mrr}, {"n_questions", report.n_questions}}.dump(2)
      << '\n';
}

void write_ranks_csv(std::ostream& out, std::span<const FitbQuestion> questions, const EvalReport& report) {
  out << "question_id,rank\n";
  for (std::size_t i = 0; i < questions.size() && i < report.ranks.size(); ++i)
    out << questions[i].question_id << ',' << report.ranks[i] << '\n';
}

}  // namespace cann::eval
