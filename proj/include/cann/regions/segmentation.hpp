#pragma once

#include <vector>

#include "cann/regions/histograms.hpp"
#include "cann/regions/region.hpp"

namespace cann::regions {

struct SegmentationConfig {
  double felz_k = 100.0;    // merge threshold scale
  double sigma = 0.8;       // pre-smoothing Gaussian std, 0 disables
  int min_size = 50;        // smallest component kept
  int regions_per_mode = 3;

  void validate() const;

  /// Defaults are tuned for 128px images; smaller images get a
  /// proportionally smaller min_size (by area, at least 1).
  SegmentationConfig scaled_for(int width, int height) const;
};

/// Component label (0..n-1, numbered by raster order of first pixel) per pixel.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  int count = 0;
};

/// Graph-based segmentation over the 8-connected pixel grid with the
/// adaptive k/|C| merge threshold, followed by absorption of components
/// smaller than min_size.
LabelImage segment_labels(const RgbImage& img, const SegmentationConfig& cfg);

/// Regions of segment_labels with histograms filled in; region ids equal labels.
std::vector<Region> felzenszwalb_segment(const RgbImage& img, const SegmentationConfig& cfg);

/// Builds histogram-carrying regions from an existing labelling.
std::vector<Region> regions_from_labels(const LabelImage& labels, const RgbImage& img,
                                        const TextureResponses& responses);

/// Gaussian blur of each channel (clamped borders); values stay in 0..255.
std::vector<double> smooth_channels(const RgbImage& img, double sigma);

}  // namespace cann::regions
