#include "cann/io/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "cann/io/binary.hpp"
#include "cann/io/config.hpp"
#include "cann/numerics/random.hpp"

namespace cann::io {

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

void write_matrix(ByteWriter& w, const std::string& name, const nn::MatrixD& m) {
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
}

}  // namespace

std::string serialize_checkpoint(CannModel& model) {
  ByteWriter w;
  w.raw(std::string(kCheckpointMagic, kMagicSize));
  w.u32(kCheckpointVersion);
  const std::string cfg = to_json(model.config()).dump();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.raw(cfg);

  const auto params = model.parameters();
  auto buffers = model.buffers();
  w.u32(static_cast<std::uint32_t>(params.size() + buffers.size()));
  for (const auto& p : params) write_matrix(w, p.name, p.tensor.value());
  for (const auto& b : buffers) write_matrix(w, b.name, *b.values);

  std::string out = w.buffer();
  ByteWriter tail;
  tail.u64(nn::fnv1a(out));
  return out + tail.buffer();
}

CannModel deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < kMagicSize + 4 || std::memcmp(bytes.data(), kCheckpointMagic, kMagicSize) != 0)
    throw CheckpointError(source + ": not a checkpoint file");
  {
    ByteReader header(bytes, source);
    header.skip(kMagicSize);
    const auto version = header.u32();
    if (version != kCheckpointVersion)
      throw CheckpointError(source + ": checkpoint format version " + std::to_string(version) +
                            " is incompatible with this build (expects " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < kMagicSize + 4 + 8) throw CheckpointError(source + ": truncated checkpoint");
  const std::size_t body = bytes.size() - 8;
  {
    ByteReader tail(bytes, source);
    tail.skip(body);
    if (tail.u64() != nn::fnv1a(std::string_view(bytes.data(), body)))
      throw CheckpointError(source + ": checksum mismatch (truncated or corrupted checkpoint)");
  }

  try {
    ByteReader in(bytes, source, body);
    in.skip(kMagicSize + 4);
    const auto cfg_len = in.u32();
    ModelConfig cfg = model_config_from_json(nlohmann::json::parse(in.bytes(cfg_len)));
    CannModel model(cfg, 0);

    std::map<std::string, nn::MatrixD> stored;
    const auto count = in.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto name = in.bytes(in.u16());
      const auto rows = in.u32();
      const auto cols = in.u32();
      nn::MatrixD m(rows, cols);
      for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = in.f64();
      stored.emplace(name, std::move(m));
    }
    if (!in.done()) throw CheckpointError(source + ": trailing bytes after tensor table");

    auto take = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) -> nn::MatrixD& {
      auto it = stored.find(name);
      if (it == stored.end()) throw CheckpointError(source + ": missing tensor '" + name + "'");
      if (it->second.rows() != rows || it->second.cols() != cols)
        throw CheckpointError(source + ": tensor '" + name + "' has the wrong shape");
      return it->second;
    };
    auto params = model.parameters();
    for (auto& p : params) p.tensor.mutable_value() = take(p.name, p.tensor.rows(), p.tensor.cols());
    for (auto& b : model.buffers()) *b.values = take(b.name, 1, b.values->cols());
    if (stored.size() != params.size() + model.buffers().size())
      throw CheckpointError(source + ": unexpected extra tensors");
    return model;
  } catch (const ParseError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(source + ": corrupt config block: " + e.what());
  } catch (const InputError& e) {
    throw CheckpointError(source + ": invalid config: " + e.what());
  }
}

void save_checkpoint(CannModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

CannModel load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const InputError& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(bytes, path.string());
}

}  // namespace cann::io
