#include "cann/regions/region.hpp"

#include <algorithm>

#include "cann/errors.hpp"

namespace cann::regions {

std::string_view to_string(SemanticMode mode) {
  switch (mode) {
    case SemanticMode::color:
      return "color";
    case SemanticMode::texture:
      return "texture";
    case SemanticMode::hybrid:
      return "hybrid";
  }
  return "unknown";
}

SemanticMode parse_mode(std::string_view name) {
  if (name == "color") return SemanticMode::color;
  if (name == "texture") return SemanticMode::texture;
  if (name == "hybrid") return SemanticMode::hybrid;
  throw InputError("unknown semantic mode '" + std::string(name) + "' (expected color, texture or hybrid)");
}

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw InputError("image dimensions must be non-negative");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
}

RgbImage RgbImage::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
  return img;
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  auto* p = &pixels[3 * (static_cast<std::size_t>(y) * width + x)];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

BoundingBox bounding_box(const std::vector<int>& pixels, int width) {
  if (pixels.empty()) throw InputError("bounding_box of an empty pixel set");
  BoundingBox box{width, 0, -1, -1};
  box.min_y = pixels.front() / width;
  box.max_y = pixels.front() / width;
  for (int p : pixels) {
    const int x = p % width;
    const int y = p / width;
    box.min_x = std::min(box.min_x, x);
    box.max_x = std::max(box.max_x, x);
    box.min_y = std::min(box.min_y, y);
    box.max_y = std::max(box.max_y, y);
  }
  return box;
}

RgbImage crop(const RgbImage& img, const BoundingBox& box) {
  if (box.min_x < 0 || box.min_y < 0 || box.max_x >= img.width || box.max_y >= img.height || box.width() <= 0 ||
      box.height() <= 0)
    throw InputError("crop box lies outside the image");
  RgbImage out(box.width(), box.height());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.set(x, y, img.at(box.min_x + x, box.min_y + y, 0), img.at(box.min_x + x, box.min_y + y, 1),
              img.at(box.min_x + x, box.min_y + y, 2));
  return out;
}

}  // namespace cann::regions
