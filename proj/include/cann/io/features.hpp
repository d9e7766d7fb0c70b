#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cann/io/outfits.hpp"
#include "cann/model/collection.hpp"
#include "cann/regions/region.hpp"

namespace cann::io {

struct RegionKey {
  std::string item_id;
  regions::SemanticMode mode;
  int region;

  auto operator<=>(const RegionKey&) const = default;
};

/// Item features and, optionally, per-region features. Every vector has
/// length `dim`.
struct FeatureStore {
  Eigen::Index dim = 0;
  std::map<std::string, nn::RowVectorD> items;
  std::map<RegionKey, nn::RowVectorD> regions;

  std::size_t size() const { return items.size() + regions.size(); }
  const nn::RowVectorD& item(const std::string& id) const;
  const nn::RowVectorD& region(const RegionKey& key) const;
};

enum class FeatureFormat { json_lines, binary };

inline constexpr std::array<char, 8> kFeatureMagic{'C', 'A', 'N', 'N', 'F', 'V', '0', '1'};

/// `<item_id>.<mode>.<r>`, as used by crop file names and binary region records.
std::string region_record_id(const RegionKey& key);
std::optional<RegionKey> parse_region_record_id(const std::string& id);

/// Detects the format from the first bytes. Duplicate ids keep the last
/// record and leave a warning.
FeatureStore load_features(const std::filesystem::path& path, Diagnostics* diag = nullptr);
void save_features(const std::filesystem::path& path, const FeatureStore& store,
                   FeatureFormat format = FeatureFormat::json_lines);

/// Deterministic unit-norm pseudo-random vectors keyed by (id, seed).
nn::RowVectorD stub_vector(const std::string& key, Eigen::Index dim, std::uint64_t seed);
FeatureStore stub_features(std::span<const std::string> item_ids, Eigen::Index dim, std::uint64_t seed);
/// All 3×3 region slots of every item.
FeatureStore stub_region_features(std::span<const std::string> item_ids, Eigen::Index dim, std::uint64_t seed);

/// Collects the global vector and the 9 region slots of an item. Throws
/// InputError naming the item if anything is missing.
ItemFeatures item_features(const std::string& item_id, const FeatureStore& global, const FeatureStore& regions);

}  // namespace cann::io
