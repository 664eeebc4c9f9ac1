#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "avdoa/nn/model.hpp"

namespace avdoa::nn {

// "DOAM", u16 version, u8 architecture tag, u16 dim count + u32 dims
// (gcc_dim, vis_dim, outputs, weight_hidden, hidden...), f64 BN momentum and
// epsilon, then every parameter block in Network::parameters() order as
// little-endian f64, then per BN layer its running mean and running variance.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<char> serialize_checkpoint(const Network& net);
Network deserialize_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

// Loads into an existing network; throws ShapeMismatch when the stored
// architecture differs from `net.config()`.
void load_checkpoint_into(Network& net, const std::filesystem::path& path);

}  // namespace avdoa::nn
