#include "naht/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "naht/error.hpp"

namespace naht::nn {
namespace {

constexpr char kMagic[8] = {'N', 'A', 'H', 'T', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::ostream& out, U v) {
  static_assert(std::is_trivially_copyable_v<U>);
  unsigned char bytes[sizeof(U)];
  std::memcpy(bytes, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw ConfigError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  U v;
  std::memcpy(&v, bytes, sizeof(U));
  return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, sizeof(T));
    put<std::uint64_t>(out, store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& e = store.entry(i);
      put<std::uint32_t>(out, std::uint32_t(e.name.size()));
      out.write(e.name.data(), std::streamsize(e.name.size()));
      put<std::uint32_t>(out, std::uint32_t(e.value.shape.size()));
      for (auto d : e.value.shape) put<std::uint64_t>(out, d);
      for (T v : e.value.data) put<T>(out, v);
    }
    if (!out) throw ConfigError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("not a checkpoint file: " + path.string());
  }
  CheckpointData data;
  data.version = get<std::uint32_t>(in);
  if (data.version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(data.version));
  }
  data.float_width = get<std::uint32_t>(in);
  if (data.float_width != 4 && data.float_width != 8) {
    throw ConfigError("bad float width in checkpoint");
  }
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = get<std::uint32_t>(in);
    e.name.resize(len);
    in.read(e.name.data(), len);
    const auto rank = get<std::uint32_t>(in);
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get<std::uint64_t>(in));
    const std::size_t n = Tensor<double>::element_count(e.shape);
    e.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      e.values[k] = data.float_width == 4 ? double(get<float>(in)) : get<double>(in);
    }
    data.entries.push_back(std::move(e));
  }
  return data;
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamStore<T>& store) {
  const CheckpointData data = read_checkpoint(path);
  if (data.entries.size() != store.size()) {
    throw ConfigError("checkpoint has " + std::to_string(data.entries.size()) +
                      " entries, network expects " + std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& dst = store.entry(i);
    const auto& src = data.entries[i];
    if (src.name != dst.name || src.shape != dst.value.shape) {
      throw ConfigError("checkpoint entry " + src.name + " does not match network entry " +
                        dst.name);
    }
    for (std::size_t k = 0; k < src.values.size(); ++k) {
      dst.value.data[k] = static_cast<T>(src.values[k]);
    }
  }
}

template void save_checkpoint<float>(const std::filesystem::path&, const ParamStore<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParamStore<double>&);
template void load_checkpoint<float>(const std::filesystem::path&, ParamStore<float>&);
template void load_checkpoint<double>(const std::filesystem::path&, ParamStore<double>&);

}  // namespace naht::nn
