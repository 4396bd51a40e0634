#pragma once

#include <string>

#include "sensor/nn.hpp"

namespace sensor {

// Parameter checkpoint file: magic "SNSRCKPT", format version as u32, then
// per-tensor records: name length (u32), UTF-8 name, rank (u32), dims (u32
// each), data as little-endian 64-bit floats. Records run until end of file.
inline constexpr char kCheckpointMagic[8] = {'S', 'N', 'S', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const NamedParams& params);

/// Loads values into the given registry. Every registered tensor must be
/// present in the file with a matching shape; extra file records are errors.
void load_checkpoint(const std::string& path, NamedParams& params);

/// Reads just one named tensor's values (e.g. run metadata).
std::vector<double> peek_checkpoint_tensor(const std::string& path, const std::string& name);

}  // namespace sensor
