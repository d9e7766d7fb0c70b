#include "cann/io/outfits.hpp"

#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <set>

#include "cann/errors.hpp"

namespace cann::io {

using nlohmann::json;

void validate_outfit(const OutfitRecord& outfit) {
  const auto n = outfit.items.size();
  if (n < kMinOutfitItems)
    throw ValidationError("outfit '" + outfit.outfit_id + "' has " + std::to_string(n) + " item(s); at least " +
                          std::to_string(kMinOutfitItems) + " are required");
  if (n > kMaxOutfitItems)
    throw ValidationError("outfit '" + outfit.outfit_id + "' has " + std::to_string(n) + " items; the cap is " +
                          std::to_string(kMaxOutfitItems));
  std::set<std::string> ids;
  for (const auto& item : outfit.items) {
    if (item.item_id.empty()) throw ValidationError("outfit '" + outfit.outfit_id + "' has an empty item_id");
    if (!ids.insert(item.item_id).second)
      throw ValidationError("outfit '" + outfit.outfit_id + "' repeats item '" + item.item_id + "'");
  }
}

std::vector<OutfitRecord> parse_outfits(std::istream& in, const std::string& source, Diagnostics* diag) {
  std::vector<OutfitRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    OutfitRecord rec;
    try {
      const json j = json::parse(line);
      rec.outfit_id = j.at("outfit_id").get<std::string>();
      for (const auto& item : j.at("items")) {
        rec.items.push_back({item.at("item_id").get<std::string>(), item.value("category", std::string{}),
                             item.value("image", std::string{})});
      }
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    }
    try {
      validate_outfit(rec);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    out.push_back(std::move(rec));
  }
  if (out.empty() && diag) diag->warn(source + ": no outfits");
  return out;
}

std::vector<OutfitRecord> load_outfits(const std::filesystem::path& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open outfits file " + path.string());
  return parse_outfits(in, path.string(), diag);
}

void write_outfits(std::ostream& out, const std::vector<OutfitRecord>& outfits) {
  for (const auto& o : outfits) {
    json items = json::array();
    for (const auto& item : o.items)
      items.push_back({{"item_id", item.item_id}, {"category", item.category}, {"image", item.image}});
    out << json{{"outfit_id", o.outfit_id}, {"items", items}}.dump() << '\n';
  }
}

void save_outfits(const std::filesystem::path& path, const std::vector<OutfitRecord>& outfits) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_outfits(out, outfits);
}

}  // namespace cann::io
