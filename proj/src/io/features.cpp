#include "cann/io/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "cann/errors.hpp"
#include "cann/io/binary.hpp"
#include "cann/numerics/random.hpp"

namespace cann::io {

using nlohmann::json;

const nn::RowVectorD& FeatureStore::item(const std::string& id) const {
  auto it = items.find(id);
  if (it == items.end()) throw InputError("no features for item '" + id + "'");
  return it->second;
}

const nn::RowVectorD& FeatureStore::region(const RegionKey& key) const {
  auto it = regions.find(key);
  if (it == regions.end()) throw InputError("no region features for item '" + region_record_id(key) + "'");
  return it->second;
}

std::string region_record_id(const RegionKey& key) {
  return key.item_id + "." + std::string(regions::to_string(key.mode)) + "." + std::to_string(key.region);
}

std::optional<RegionKey> parse_region_record_id(const std::string& id) {
  const auto last = id.rfind('.');
  if (last == std::string::npos || last == 0) return std::nullopt;
  const auto mid = id.rfind('.', last - 1);
  if (mid == std::string::npos || mid == 0) return std::nullopt;
  const std::string mode = id.substr(mid + 1, last - mid - 1);
  const std::string index = id.substr(last + 1);
  if (mode != "color" && mode != "texture" && mode != "hybrid") return std::nullopt;
  if (index.size() != 1 || index[0] < '0' || index[0] >= '0' + kRegionsPerMode) return std::nullopt;
  return RegionKey{id.substr(0, mid), regions::parse_mode(mode), index[0] - '0'};
}

namespace {

void insert(FeatureStore& store, const std::string& id, nn::RowVectorD vec, const std::string& where,
            Diagnostics* diag, bool region_record, std::optional<RegionKey> key = std::nullopt) {
  if (vec.cols() != store.dim)
    throw InputError(where + "item '" + id + "' has dimension " + std::to_string(vec.cols()) + ", expected " +
                     std::to_string(store.dim));
  if (!vec.allFinite()) throw InputError(where + "item '" + id + "' has non-finite entries");
  bool duplicate = false;
  if (region_record) {
    duplicate = store.regions.count(*key) > 0;
    store.regions[*key] = std::move(vec);
  } else {
    duplicate = store.items.count(id) > 0;
    store.items[id] = std::move(vec);
  }
  if (duplicate && diag) diag->warn(where + "duplicate record for '" + id + "', keeping the last one");
}

FeatureStore load_json_lines(std::istream& in, const std::string& source, Diagnostics* diag) {
  FeatureStore store;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    }
    try {
      if (!header) {
        const auto dim = j.at("dim").get<long long>();
        if (dim < 1) throw ParseError(where + "dimension must be positive");
        store.dim = dim;
        header = true;
        continue;
      }
      const auto id = j.at("item_id").get<std::string>();
      const auto values = j.at("vector").get<std::vector<double>>();
      nn::RowVectorD vec = Eigen::Map<const nn::RowVectorD>(values.data(), static_cast<Eigen::Index>(values.size()));
      if (j.contains("mode")) {
        RegionKey key{id, regions::parse_mode(j.at("mode").get<std::string>()), j.at("region").get<int>()};
        if (key.region < 0 || key.region >= kRegionsPerMode)
          throw ParseError(where + "region index " + std::to_string(key.region) + " out of range");
        insert(store, id, std::move(vec), where, diag, true, key);
      } else {
        insert(store, id, std::move(vec), where, diag, false);
      }
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    }
  }
  if (!header) throw ParseError(source + ": missing {\"dim\": ...} header line");
  return store;
}

FeatureStore load_binary(const std::string& bytes, const std::string& source, Diagnostics* diag) {
  ByteReader in(bytes, source);
  in.skip(kFeatureMagic.size());
  FeatureStore store;
  store.dim = in.u32();
  if (store.dim < 1) throw ParseError(source + ": dimension must be positive");
  std::size_t record = 0;
  while (!in.done()) {
    ++record;
    const std::string where = source + ": record " + std::to_string(record) + ": ";
    const auto len = in.u16();
    std::string id = in.bytes(len);
    nn::RowVectorD vec(store.dim);
    for (Eigen::Index i = 0; i < store.dim; ++i) vec[i] = static_cast<double>(in.f32());
    if (auto key = parse_region_record_id(id))
      insert(store, id, std::move(vec), where, diag, true, key);
    else
      insert(store, id, std::move(vec), where, diag, false);
  }
  return store;
}

}  // namespace

FeatureStore load_features(const std::filesystem::path& path, Diagnostics* diag) {
  std::string bytes = read_file(path);
  if (bytes.size() >= kFeatureMagic.size() && std::memcmp(bytes.data(), kFeatureMagic.data(), kFeatureMagic.size()) == 0)
    return load_binary(bytes, path.string(), diag);
  std::istringstream in(bytes);
  return load_json_lines(in, path.string(), diag);
}

void save_features(const std::filesystem::path& path, const FeatureStore& store, FeatureFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  if (format == FeatureFormat::json_lines) {
    out << json{{"dim", store.dim}}.dump() << '\n';
    auto vec_json = [](const nn::RowVectorD& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    for (const auto& [id, v] : store.items) out << json{{"item_id", id}, {"vector", vec_json(v)}}.dump() << '\n';
    for (const auto& [key, v] : store.regions)
      out << json{{"item_id", key.item_id},
                  {"mode", regions::to_string(key.mode)},
                  {"region", key.region},
                  {"vector", vec_json(v)}}
                 .dump()
          << '\n';
    return;
  }
  ByteWriter w;
  w.raw(std::string(kFeatureMagic.begin(), kFeatureMagic.end()));
  w.u32(static_cast<std::uint32_t>(store.dim));
  auto record = [&](const std::string& id, const nn::RowVectorD& v) {
    if (id.size() > 0xFFFF) throw InputError("item id too long for the binary format: " + id.substr(0, 32));
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.raw(id);
    for (Eigen::Index i = 0; i < v.size(); ++i) w.f32(static_cast<float>(v[i]));
  };
  for (const auto& [id, v] : store.items) record(id, v);
  for (const auto& [key, v] : store.regions) record(region_record_id(key), v);
  out << w.buffer();
}

nn::RowVectorD stub_vector(const std::string& key, Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw InputError("stub features need a positive dimension");
  nn::Rng rng(nn::fnv1a(key, nn::fnv1a(std::to_string(seed))));
  nn::RowVectorD v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v / v.norm();
}

FeatureStore stub_features(std::span<const std::string> item_ids, Eigen::Index dim, std::uint64_t seed) {
  FeatureStore store;
  store.dim = dim;
  for (const auto& id : item_ids) store.items[id] = stub_vector(id, dim, seed);
  return store;
}

FeatureStore stub_region_features(std::span<const std::string> item_ids, Eigen::Index dim, std::uint64_t seed) {
  FeatureStore store;
  store.dim = dim;
  for (const auto& id : item_ids)
    for (auto mode : regions::kAllModes)
      for (int r = 0; r < kRegionsPerMode; ++r) {
        RegionKey key{id, mode, r};
        store.regions[key] = stub_vector(region_record_id(key), dim, seed);
      }
  return store;
}

ItemFeatures item_features(const std::string& item_id, const FeatureStore& global, const FeatureStore& regions) {
  ItemFeatures f;
  f.global = global.item(item_id);
  f.regions.resize(kSlots, regions.dim);
  for (int m = 0; m < kModes; ++m)
    for (int r = 0; r < kRegionsPerMode; ++r) {
      RegionKey key{item_id, regions::kAllModes[m], r};
      auto it = regions.regions.find(key);
      if (it == regions.regions.end())
        throw InputError("item '" + item_id + "' is missing region features for " + region_record_id(key));
      f.regions.row(m * kRegionsPerMode + r) = it->second;
    }
  return f;
}

}  // namespace cann::io
