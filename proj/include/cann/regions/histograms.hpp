#pragma once

#include <vector>

#include "cann/regions/region.hpp"

namespace cann::regions {

/// Bin of an 8-bit value: bin b covers [floor(256b/25), floor(256(b+1)/25)).
int color_bin(std::uint8_t value);

/// Per-channel 25-bin histograms, concatenated (R, G, B) and L1-normalized.
ColorHistogram color_histogram(const std::vector<int>& pixels, const RgbImage& img);
ColorHistogram color_histogram(const Region& region, const RgbImage& img);

/// Oriented first-derivative-of-Gaussian magnitudes for every pixel, channel
/// and orientation (o · 22.5°), quantized to 10 bins over a fixed range.
class TextureResponses {
 public:
  static constexpr double kSigma = 1.0;

  explicit TextureResponses(const RgbImage& img);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Unquantized |response| at linear pixel index p.
  double magnitude(int p, int channel, int orientation) const {
    return magnitude_[(static_cast<std::size_t>(p) * 3 + channel) * kOrientations + orientation];
  }
  int bin(int p, int channel, int orientation) const {
    return bins_[(static_cast<std::size_t>(p) * 3 + channel) * kOrientations + orientation];
  }
  /// Largest magnitude an 8-bit image can produce; the top of the bin range.
  static double max_response();

 private:
  int width_;
  int height_;
  std::vector<double> magnitude_;
  std::vector<std::uint8_t> bins_;
};

/// Slot (channel, orientation) occupies [(channel·8 + orientation)·10, +10).
TextureHistogram texture_histogram(const std::vector<int>& pixels, const TextureResponses& responses);
TextureHistogram texture_histogram(const Region& region, const RgbImage& img);

/// Histogram intersection: color, texture, or their sum for hybrid.
double similarity(const Region& a, const Region& b, SemanticMode mode);

/// Union of two disjoint regions with size-weighted histograms. The id of
/// the result is `new_id`.
Region merge(const Region& a, const Region& b, int new_id = -1);

}  // namespace cann::regions
