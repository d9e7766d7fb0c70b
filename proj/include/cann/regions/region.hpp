#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cann::regions {

enum class SemanticMode { color, texture, hybrid };

inline constexpr std::array<SemanticMode, 3> kAllModes{SemanticMode::color, SemanticMode::texture,
                                                      SemanticMode::hybrid};

std::string_view to_string(SemanticMode mode);
/// Throws InputError for anything but "color", "texture" or "hybrid".
SemanticMode parse_mode(std::string_view name);

inline constexpr int kColorBins = 25;
inline constexpr int kColorHistSize = 3 * kColorBins;
inline constexpr int kOrientations = 8;
inline constexpr int kTextureBins = 10;
inline constexpr int kTextureHistSize = 3 * kOrientations * kTextureBins;

using ColorHistogram = Eigen::Matrix<double, 1, kColorHistSize>;
using TextureHistogram = Eigen::Matrix<double, 1, kTextureHistSize>;

/// 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h);
  static RgbImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  bool empty() const { return width <= 0 || height <= 0; }
  int area() const { return width * height; }
  std::uint8_t at(int x, int y, int channel) const { return pixels[3 * (y * width + x) + channel]; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  bool operator==(const RgbImage&) const = default;
};

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;  // inclusive
  int max_y = 0;  // inclusive

  int width() const { return max_x - min_x + 1; }
  int height() const { return max_y - min_y + 1; }
  bool operator==(const BoundingBox&) const = default;
};

/// Pixel set (sorted linear indices y·width + x) with its descriptors.
struct Region {
  int id = -1;
  std::vector<int> pixels;
  BoundingBox bbox;
  ColorHistogram color = ColorHistogram::Zero();
  TextureHistogram texture = TextureHistogram::Zero();

  std::size_t size() const { return pixels.size(); }
};

/// Tight bounding box of linear pixel indices for an image of the given width.
BoundingBox bounding_box(const std::vector<int>& pixels, int width);

RgbImage crop(const RgbImage& img, const BoundingBox& box);

}  // namespace cann::regions
