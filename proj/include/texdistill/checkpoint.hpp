#pragma once

#include <cstdint>
#include <string>

#include "texdistill/pipeline.hpp"

namespace texdistill {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: 8-byte magic "TXDCKPT\0", uint32 version, uint64 header
// length, JSON header (grid config, Adam hyperparameters and step count,
// next iteration, parameter count), then parameters, first moments and
// second moments as little-endian float64 arrays. Written via a temporary
// file and rename.
void save_checkpoint(const std::string& path, const DistillState& state);

// Throws std::runtime_error on unreadable files, bad magic, a version other
// than kCheckpointVersion, or truncated payloads.
DistillState load_checkpoint(const std::string& path);

}  // namespace texdistill
