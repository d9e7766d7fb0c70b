#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cann::io {

/// Collected non-fatal messages from loaders.
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

struct OutfitItem {
  std::string item_id;
  std::string category;
  std::string image;

  bool operator==(const OutfitItem&) const = default;
};

struct OutfitRecord {
  std::string outfit_id;
  std::vector<OutfitItem> items;

  bool operator==(const OutfitRecord&) const = default;
};

inline constexpr std::size_t kMinOutfitItems = 2;
inline constexpr std::size_t kMaxOutfitItems = 8;

/// Throws ValidationError unless the outfit has 2..8 uniquely-identified items.
void validate_outfit(const OutfitRecord& outfit);

/// One JSON object per line; blank lines are skipped. Diagnostics carry the
/// 1-based line number and `source` name.
std::vector<OutfitRecord> parse_outfits(std::istream& in, const std::string& source, Diagnostics* diag = nullptr);
std::vector<OutfitRecord> load_outfits(const std::filesystem::path& path, Diagnostics* diag = nullptr);

void write_outfits(std::ostream& out, const std::vector<OutfitRecord>& outfits);
void save_outfits(const std::filesystem::path& path, const std::vector<OutfitRecord>& outfits);

}  // namespace cann::io
