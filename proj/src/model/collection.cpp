#include "cann/model/collection.hpp"

#include <string>

#include "cann/errors.hpp"

namespace cann {

PaddedBatch pad_left(std::span<const std::vector<ItemFeatures>> collections, Eigen::Index k) {
  if (collections.empty()) throw InputError("pad_left: empty batch");
  if (k < 1) throw InputError("pad_left: k must be positive");

  Eigen::Index d_c = -1;
  Eigen::Index d_r = -1;
  for (const auto& c : collections) {
    if (c.empty()) throw InputError("pad_left: empty collection");
    if (static_cast<Eigen::Index>(c.size()) > k)
      throw InputError("pad_left: collection of " + std::to_string(c.size()) + " items exceeds k=" + std::to_string(k));
    for (const auto& item : c) {
      if (d_c < 0) {
        d_c = item.global.cols();
        d_r = item.regions.cols();
      }
      if (item.global.cols() != d_c) throw ShapeError("pad_left: inconsistent global feature widths");
      if (item.regions.rows() != kSlots || item.regions.cols() != d_r)
        throw ShapeError("pad_left: region features must be " + std::to_string(kSlots) + "x" + std::to_string(d_r));
    }
  }

  PaddedBatch batch;
  batch.k = k;
  batch.collections = static_cast<Eigen::Index>(collections.size());
  batch.global = nn::MatrixD::Zero(batch.rows(), d_c);
  batch.regions = nn::MatrixD::Zero(batch.rows() * kSlots, d_r);
  for (Eigen::Index c = 0; c < batch.collections; ++c) {
    const auto& items = collections[static_cast<std::size_t>(c)];
    const Eigen::Index pad = k - static_cast<Eigen::Index>(items.size());
    for (Eigen::Index i = 0; i < pad; ++i) batch.padding_rows.push_back(c * k + i);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const Eigen::Index row = c * k + pad + static_cast<Eigen::Index>(i);
      batch.global.row(row) = items[i].global;
      batch.regions.middleRows(row * kSlots, kSlots) = items[i].regions;
    }
  }
  return batch;
}

}  // namespace cann
