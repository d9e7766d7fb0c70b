#pragma once

#include <span>
#include <vector>

#include "cann/numerics/tensor.hpp"

namespace cann {

/// Semantic modes, in slot order.
inline constexpr Eigen::Index kModes = 3;
/// Regions kept per mode.
inline constexpr Eigen::Index kRegionsPerMode = 3;
/// Region slots per item: mode-major, slot = mode * 3 + region.
inline constexpr Eigen::Index kSlots = kModes * kRegionsPerMode;

/// Raw (pre-reduction) features of one item.
struct ItemFeatures {
  nn::RowVectorD global;  // 1×d_c
  nn::MatrixD regions;    // kSlots×d_region
};

/// A batch of collections, each left-padded to k items and stacked row-wise.
/// Row c*k + i is position i of collection c.
struct PaddedBatch {
  Eigen::Index k = 0;
  Eigen::Index collections = 0;
  nn::MatrixD global;                      // (collections·k)×d_c, padding rows zero
  std::vector<Eigen::Index> padding_rows;  // rows that take the learnable padding item
  nn::MatrixD regions;                     // (collections·k·kSlots)×d_region, padding zero

  Eigen::Index rows() const { return collections * k; }
};

/// Left-pads every collection to length k. Each collection needs 1..k items
/// whose dimensions agree.
PaddedBatch pad_left(std::span<const std::vector<ItemFeatures>> collections, Eigen::Index k);

}  // namespace cann
