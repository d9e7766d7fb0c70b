#include "cann/regions/grouping.hpp"

#include <algorithm>
#include <map>

#include "cann/errors.hpp"

namespace cann::regions {

Adjacency adjacent_labels(const LabelImage& labels) {
  Adjacency out;
  const int w = labels.width;
  const int h = labels.height;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int a = labels.labels[static_cast<std::size_t>(y) * w + x];
      if (x + 1 < w) {
        const int b = labels.labels[static_cast<std::size_t>(y) * w + x + 1];
        if (a != b) out.emplace(std::min(a, b), std::max(a, b));
      }
      if (y + 1 < h) {
        const int b = labels.labels[static_cast<std::size_t>(y + 1) * w + x];
        if (a != b) out.emplace(std::min(a, b), std::max(a, b));
      }
    }
  return out;
}

GroupingResult group_regions(std::vector<Region> regions, Adjacency adjacency, SemanticMode mode, int target) {
  if (target < 1) throw ContractError("group_regions: target must be at least 1");
  std::map<int, Region> live;
  int next_id = 0;
  for (auto& r : regions) {
    next_id = std::max(next_id, r.id + 1);
    if (!live.emplace(r.id, std::move(r)).second) throw ContractError("group_regions: duplicate region id");
  }
  std::map<std::pair<int, int>, double> pairs;
  for (const auto& [a, b] : adjacency) {
    if (!live.count(a) || !live.count(b)) throw ContractError("group_regions: adjacency names an unknown region");
    pairs[{a, b}] = similarity(live.at(a), live.at(b), mode);
  }

  GroupingResult result;
  while (static_cast<int>(live.size()) > target && !pairs.empty()) {
    // std::map iterates pairs in lexicographic order, so the first maximum wins ties.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it)
      if (it->second > best->second) best = it;
    const auto [a, b] = best->first;
    const double sim = best->second;

    const int merged_id = next_id++;
    Region merged = merge(live.at(a), live.at(b), merged_id);
    std::vector<int> neighbours;
    for (auto it = pairs.begin(); it != pairs.end();) {
      const auto [p, q] = it->first;
      if (p == a || p == b || q == a || q == b) {
        const int other = (p == a || p == b) ? q : p;
        if (other != a && other != b) neighbours.push_back(other);
        it = pairs.erase(it);
      } else {
        ++it;
      }
    }
    live.erase(a);
    live.erase(b);
    std::sort(neighbours.begin(), neighbours.end());
    neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());
    for (int other : neighbours) pairs[{other, merged_id}] = similarity(live.at(other), merged, mode);
    live.emplace(merged_id, std::move(merged));
    result.steps.push_back({a, b, merged_id, sim});
  }
  for (auto& [id, r] : live) result.regions.push_back(std::move(r));
  return result;
}

namespace {

Region full_image_region(const RgbImage& img, const TextureResponses& responses) {
  Region r;
  r.pixels.resize(static_cast<std::size_t>(img.area()));
  for (int p = 0; p < img.area(); ++p) r.pixels[p] = p;
  r.bbox = {0, 0, img.width - 1, img.height - 1};
  r.color = color_histogram(r.pixels, img);
  r.texture = texture_histogram(r.pixels, responses);
  return r;
}

SemanticFocalContent select(const RgbImage& img, const TextureResponses& responses, const LabelImage& labels,
                            const std::vector<Region>& initial, SemanticMode mode, int per_mode) {
  auto grouped = group_regions(initial, adjacent_labels(labels), mode, per_mode);
  auto& kept = grouped.regions;
  std::stable_sort(kept.begin(), kept.end(), [](const Region& a, const Region& b) {
    return a.size() != b.size() ? a.size() > b.size() : a.id < b.id;
  });
  while (static_cast<int>(kept.size()) < per_mode) kept.push_back(full_image_region(img, responses));

  SemanticFocalContent out{mode, std::move(kept), {}};
  for (const auto& r : out.regions) out.crops.push_back(crop(img, r.bbox));
  return out;
}

}  // namespace

SemanticFocalContent extract_semantic_focal(const RgbImage& img, SemanticMode mode, const SegmentationConfig& cfg) {
  const auto labels = segment_labels(img, cfg);
  const TextureResponses responses(img);
  const auto initial = regions_from_labels(labels, img, responses);
  return select(img, responses, labels, initial, mode, cfg.regions_per_mode);
}

std::vector<SemanticFocalContent> extract_all_modes(const RgbImage& img, const SegmentationConfig& cfg) {
  const auto labels = segment_labels(img, cfg);
  const TextureResponses responses(img);
  const auto initial = regions_from_labels(labels, img, responses);
  std::vector<SemanticFocalContent> out;
  for (auto mode : kAllModes) out.push_back(select(img, responses, labels, initial, mode, cfg.regions_per_mode));
  return out;
}

}  // namespace cann::regions
