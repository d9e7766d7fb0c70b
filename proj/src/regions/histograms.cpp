#include "cann/regions/histograms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cann/errors.hpp"

namespace cann::regions {

namespace {

constexpr int kRadius = 4;

struct DerivativeKernels {
  std::array<double, 2 * kRadius + 1> smooth{};
  std::array<double, 2 * kRadius + 1> derivative{};
};

const DerivativeKernels& kernels() {
  static const DerivativeKernels k = [] {
    DerivativeKernels out;
    const double s = TextureResponses::kSigma;
    double total = 0.0;
    for (int i = -kRadius; i <= kRadius; ++i) {
      out.smooth[i + kRadius] = std::exp(-0.5 * i * i / (s * s));
      total += out.smooth[i + kRadius];
    }
    for (int i = -kRadius; i <= kRadius; ++i) {
      out.smooth[i + kRadius] /= total;
      out.derivative[i + kRadius] = -static_cast<double>(i) / (s * s) * out.smooth[i + kRadius];
    }
    return out;
  }();
  return k;
}

const std::array<std::uint8_t, 256>& color_bin_table() {
  static const std::array<std::uint8_t, 256> table = [] {
    std::array<std::uint8_t, 256> t{};
    int b = 0;
    for (int v = 0; v < 256; ++v) {
      while (b + 1 < kColorBins && (256 * (b + 1)) / kColorBins <= v) ++b;
      t[v] = static_cast<std::uint8_t>(b);
    }
    return t;
  }();
  return table;
}

void require_pixels(const std::vector<int>& pixels, int area) {
  if (pixels.empty()) throw InputError("histogram of an empty region");
  for (int p : pixels)
    if (p < 0 || p >= area) throw InputError("region pixel " + std::to_string(p) + " lies outside the image");
}

}  // namespace

int color_bin(std::uint8_t value) { return color_bin_table()[value]; }

ColorHistogram color_histogram(const std::vector<int>& pixels, const RgbImage& img) {
  require_pixels(pixels, img.area());
  ColorHistogram h = ColorHistogram::Zero();
  for (int p : pixels)
    for (int c = 0; c < 3; ++c) h[c * kColorBins + color_bin(img.pixels[3 * static_cast<std::size_t>(p) + c])] += 1.0;
  return h / h.sum();
}

ColorHistogram color_histogram(const Region& region, const RgbImage& img) {
  return color_histogram(region.pixels, img);
}

double TextureResponses::max_response() {
  double positive = 0.0;
  for (double d : kernels().derivative) positive += std::max(d, 0.0);
  return std::numbers::sqrt2 * 255.0 * positive;
}

TextureResponses::TextureResponses(const RgbImage& img) : width_(img.width), height_(img.height) {
  if (img.empty()) throw InputError("texture responses of an empty image");
  const auto& k = kernels();
  const int w = width_;
  const int h = height_;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  magnitude_.resize(n * 3 * kOrientations);
  bins_.resize(n * 3 * kOrientations);

  std::array<double, kOrientations> cosines{};
  std::array<double, kOrientations> sines{};
  for (int o = 0; o < kOrientations; ++o) {
    const double theta = o * std::numbers::pi / kOrientations;
    cosines[o] = std::cos(theta);
    sines[o] = std::sin(theta);
  }
  const double top = max_response();

  std::vector<double> dx_row(n), sm_row(n);
  for (int c = 0; c < 3; ++c) {
    // Horizontal pass: derivative and smoothing along x.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d = 0.0, s = 0.0;
        for (int i = -kRadius; i <= kRadius; ++i) {
          const int xx = std::clamp(x - i, 0, w - 1);
          const double v = img.at(xx, y, c);
          d += k.derivative[i + kRadius] * v;
          s += k.smooth[i + kRadius] * v;
        }
        dx_row[static_cast<std::size_t>(y) * w + x] = d;
        sm_row[static_cast<std::size_t>(y) * w + x] = s;
      }
    // Vertical pass: gx smooths the x-derivative, gy differentiates the x-smoothed image.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double gx = 0.0, gy = 0.0;
        for (int i = -kRadius; i <= kRadius; ++i) {
          const std::size_t q = static_cast<std::size_t>(std::clamp(y - i, 0, h - 1)) * w + x;
          gx += k.smooth[i + kRadius] * dx_row[q];
          gy += k.derivative[i + kRadius] * sm_row[q];
        }
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        for (int o = 0; o < kOrientations; ++o) {
          const double m = std::abs(cosines[o] * gx + sines[o] * gy);
          const std::size_t at = (p * 3 + c) * kOrientations + o;
          magnitude_[at] = m;
          bins_[at] = static_cast<std::uint8_t>(std::min(kTextureBins - 1, static_cast<int>(kTextureBins * m / top)));
        }
      }
  }
}

TextureHistogram texture_histogram(const std::vector<int>& pixels, const TextureResponses& responses) {
  require_pixels(pixels, responses.width() * responses.height());
  TextureHistogram hist = TextureHistogram::Zero();
  for (int p : pixels)
    for (int c = 0; c < 3; ++c)
      for (int o = 0; o < kOrientations; ++o) hist[(c * kOrientations + o) * kTextureBins + responses.bin(p, c, o)] += 1.0;
  return hist / hist.sum();
}

TextureHistogram texture_histogram(const Region& region, const RgbImage& img) {
  return texture_histogram(region.pixels, TextureResponses(img));
}

double similarity(const Region& a, const Region& b, SemanticMode mode) {
  const double color = a.color.cwiseMin(b.color).sum();
  const double texture = a.texture.cwiseMin(b.texture).sum();
  switch (mode) {
    case SemanticMode::color:
      return color;
    case SemanticMode::texture:
      return texture;
    case SemanticMode::hybrid:
      return color + texture;
  }
  return 0.0;
}

Region merge(const Region& a, const Region& b, int new_id) {
  Region out;
  out.id = new_id;
  out.pixels.reserve(a.size() + b.size());
  std::merge(a.pixels.begin(), a.pixels.end(), b.pixels.begin(), b.pixels.end(), std::back_inserter(out.pixels));
  if (std::adjacent_find(out.pixels.begin(), out.pixels.end()) != out.pixels.end())
    throw ContractError("merge: regions " + std::to_string(a.id) + " and " + std::to_string(b.id) + " overlap");
  const double sa = static_cast<double>(a.size());
  const double sb = static_cast<double>(b.size());
  out.color = (sa * a.color + sb * b.color) / (sa + sb);
  out.texture = (sa * a.texture + sb * b.texture) / (sa + sb);
  out.bbox = {std::min(a.bbox.min_x, b.bbox.min_x), std::min(a.bbox.min_y, b.bbox.min_y),
              std::max(a.bbox.max_x, b.bbox.max_x), std::max(a.bbox.max_y, b.bbox.max_y)};
  return out;
}

}  // namespace cann::regions
