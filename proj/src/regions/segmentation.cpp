#include "cann/regions/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cann/errors.hpp"

namespace cann::regions {

namespace {

struct Edge {
  int a;
  int b;
  double w;
};

// Disjoint-set forest with union by rank.
class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), rank_(n, 0), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  int join(int a, int b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

  int size(int root) const { return size_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
  std::vector<int> size_;
};

}  // namespace

void SegmentationConfig::validate() const {
  if (!(felz_k > 0.0)) throw InputError("segmentation: felz_k must be positive");
  if (!(sigma >= 0.0)) throw InputError("segmentation: sigma must be non-negative");
  if (min_size < 1) throw InputError("segmentation: min_size must be at least 1");
  if (regions_per_mode < 1) throw InputError("segmentation: regions_per_mode must be at least 1");
}

SegmentationConfig SegmentationConfig::scaled_for(int width, int height) const {
  SegmentationConfig out = *this;
  const long area = static_cast<long>(width) * height;
  constexpr long kReference = 128L * 128L;
  if (width < 128 || height < 128) {
    const long scaled = (static_cast<long>(min_size) * std::min(area, kReference)) / kReference;
    out.min_size = static_cast<int>(std::max(1L, scaled));
  }
  return out;
}

std::vector<double> smooth_channels(const RgbImage& img, double sigma) {
  const int w = img.width;
  const int h = img.height;
  std::vector<double> out(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i];
  if (sigma < 0.01) return out;

  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> mask(radius + 1);
  double total = 0.0;
  for (int i = 0; i <= radius; ++i) {
    mask[i] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    total += i == 0 ? mask[i] : 2.0 * mask[i];
  }
  for (auto& m : mask) m /= total;

  std::vector<double> tmp(out.size());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = mask[0] * out[3 * (static_cast<std::size_t>(y) * w + x) + c];
        for (int i = 1; i <= radius; ++i) {
          const int l = std::max(x - i, 0);
          const int r = std::min(x + i, w - 1);
          s += mask[i] * (out[3 * (static_cast<std::size_t>(y) * w + l) + c] +
                          out[3 * (static_cast<std::size_t>(y) * w + r) + c]);
        }
        tmp[3 * (static_cast<std::size_t>(y) * w + x) + c] = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = mask[0] * tmp[3 * (static_cast<std::size_t>(y) * w + x) + c];
        for (int i = 1; i <= radius; ++i) {
          const int u = std::max(y - i, 0);
          const int d = std::min(y + i, h - 1);
          s += mask[i] * (tmp[3 * (static_cast<std::size_t>(u) * w + x) + c] +
                          tmp[3 * (static_cast<std::size_t>(d) * w + x) + c]);
        }
        out[3 * (static_cast<std::size_t>(y) * w + x) + c] = s;
      }
  }
  return out;
}

LabelImage segment_labels(const RgbImage& img, const SegmentationConfig& cfg) {
  if (img.empty()) throw InputError("segmentation of a zero-area image");
  cfg.validate();
  const int w = img.width;
  const int h = img.height;
  const int n = w * h;
  const auto smooth = smooth_channels(img, cfg.sigma);

  auto diff = [&](int p, int q) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = smooth[3 * static_cast<std::size_t>(p) + c] - smooth[3 * static_cast<std::size_t>(q) + c];
      s += d * d;
    }
    return std::sqrt(s);
  };

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x < w - 1) edges.push_back({p, p + 1, diff(p, p + 1)});
      if (y < h - 1) edges.push_back({p, p + w, diff(p, p + w)});
      if (x < w - 1 && y < h - 1) edges.push_back({p, p + w + 1, diff(p, p + w + 1)});
      if (x < w - 1 && y > 0) edges.push_back({p, p - w + 1, diff(p, p - w + 1)});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.w < b.w; });

  DisjointSets sets(n);
  std::vector<double> threshold(n, cfg.felz_k);
  for (const auto& e : edges) {
    int a = sets.find(e.a);
    int b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[a] && e.w <= threshold[b]) {
      a = sets.join(a, b);
      threshold[a] = e.w + cfg.felz_k / sets.size(a);
    }
  }
  for (const auto& e : edges) {
    const int a = sets.find(e.a);
    const int b = sets.find(e.b);
    if (a != b && (sets.size(a) < cfg.min_size || sets.size(b) < cfg.min_size)) sets.join(a, b);
  }

  LabelImage out{w, h, std::vector<int>(n, -1), 0};
  std::vector<int> label_of_root(n, -1);
  for (int p = 0; p < n; ++p) {
    const int r = sets.find(p);
    if (label_of_root[r] < 0) label_of_root[r] = out.count++;
    out.labels[p] = label_of_root[r];
  }
  return out;
}

std::vector<Region> regions_from_labels(const LabelImage& labels, const RgbImage& img,
                                        const TextureResponses& responses) {
  std::vector<Region> regions(labels.count);
  for (int i = 0; i < labels.count; ++i) regions[i].id = i;
  for (int p = 0; p < static_cast<int>(labels.labels.size()); ++p) regions[labels.labels[p]].pixels.push_back(p);
  for (auto& r : regions) {
    r.bbox = bounding_box(r.pixels, labels.width);
    r.color = color_histogram(r.pixels, img);
    r.texture = texture_histogram(r.pixels, responses);
  }
  return regions;
}

std::vector<Region> felzenszwalb_segment(const RgbImage& img, const SegmentationConfig& cfg) {
  const auto labels = segment_labels(img, cfg);
  return regions_from_labels(labels, img, TextureResponses(img));
}

}  // namespace cann::regions
