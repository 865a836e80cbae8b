#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "abaf/nn/layers.hpp"

namespace abaf::nn {

/// Checkpoint layout (little-endian):
///   "ABCK" | u8 version | u32 entry_count
///   per entry: u32 name_len | name | u32 ndim | ndim x u64 dims | f64 values
/// Entries are the layer's parameters followed by its buffers.
inline constexpr std::uint8_t kCheckpointVersion = 1;

void save_checkpoint(Layer& model, const std::filesystem::path& path);

/// Loads values by name. Every parameter and buffer of `model` must be
/// present with an identical shape.
void load_checkpoint(Layer& model, const std::filesystem::path& path);

/// In-memory copy of all parameter and buffer values.
struct Snapshot {
    std::vector<std::vector<double>> values;
};
Snapshot take_snapshot(Layer& model);
void restore_snapshot(Layer& model, const Snapshot& snapshot);

}  // namespace abaf::nn
