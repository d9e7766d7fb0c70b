#pragma once

#include <set>
#include <utility>
#include <vector>

#include "cann/regions/segmentation.hpp"

namespace cann::regions {

using Adjacency = std::set<std::pair<int, int>>;  // (lower id, higher id)

/// Pairs of labels that touch under 4-connectivity.
Adjacency adjacent_labels(const LabelImage& labels);

struct MergeStep {
  int first;   // lower id
  int second;  // higher id
  int merged;
  double similarity;
};

struct GroupingResult {
  std::vector<Region> regions;
  std::vector<MergeStep> steps;
};

/// Repeatedly merges the most similar adjacent pair until `target` regions
/// remain (or no adjacent pair is left). Ties go to the lexicographically
/// lowest (lower id, higher id). Merged regions take fresh ids above every
/// input id.
GroupingResult group_regions(std::vector<Region> regions, Adjacency adjacency, SemanticMode mode, int target);

struct SemanticFocalContent {
  SemanticMode mode;
  std::vector<Region> regions;  // descending size; padding entries have id -1
  std::vector<RgbImage> crops;  // bounding-box crop of each region
};

/// Segments, groups down to cfg.regions_per_mode under `mode`, and crops.
/// Short results are padded with full-image regions.
SemanticFocalContent extract_semantic_focal(const RgbImage& img, SemanticMode mode, const SegmentationConfig& cfg);

/// All three modes from one segmentation pass.
std::vector<SemanticFocalContent> extract_all_modes(const RgbImage& img, const SegmentationConfig& cfg);

}  // namespace cann::regions
