#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otta/network.hpp"

namespace otta {

// Checkpoint byte layout (all integers and floats little-endian):
//   magic "OTTA"
//   u16   format version (currently 1)
//   arch config block:
//     u32 n_channels, u32 n_samples, u32 n_classes,
//     u32 temporal_filters, u32 depth_multiplier, u32 kernel_length,
//     u32 pool, f32 dropout, f32 bn_momentum
//   u32   parameter count
//   per parameter:
//     u16 name length, name bytes,
//     u8  ndim, u32 dims[ndim],
//     f32 data[prod(dims)]
// Parameters include the batch-norm running statistics; round-trips are
// bit-exact because parameters are stored as float32 in memory too.

std::vector<uint8_t> save_checkpoint(const Network& net);
Network load_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint_file(const Network& net, const std::string& path);
Network load_checkpoint_file(const std::string& path);

}  // namespace otta
