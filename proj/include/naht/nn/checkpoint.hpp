#ifndef NAHT_NN_CHECKPOINT_HPP_
#define NAHT_NN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "naht/nn/param_store.hpp"

namespace naht::nn {

// Checkpoint layout, all integers little-endian:
//
//   char[8]  magic "NAHTCKPT"
//   u32      format_version (1)
//   u32      float width in bytes (4 or 8)
//   u64      entry count
//   per entry:
//     u32    name length
//     bytes  name (UTF-8, no terminator)
//     u32    rank
//     u64    dims[rank]
//     values product(dims) IEEE-754 numbers of the declared width
//
// Only parameter values are stored; optimizer state is not.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t float_width = 8;
  std::vector<CheckpointEntry> entries;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store);

CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Loads values into a store whose names and shapes must match the file.
template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamStore<T>& store);

}  // namespace naht::nn

#endif  // NAHT_NN_CHECKPOINT_HPP_
