#pragma once

// PADA checkpoint container. All integers little-endian:
//
//   "PADA" | version u8 | tensor count u32
//   per tensor: name (u32 len + UTF-8) | prunable u8 | rank u32 |
//               dims u64 x rank | float32 payload (row-major)
//   metadata:   pair count u32 | (key, value) as length-prefixed UTF-8
//
// The role of the set is stored under the metadata key "role".

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pada/param_store.hpp"

namespace pada {

using Metadata = std::map<std::string, std::string>;

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  ParameterSet params;
  Metadata metadata;
};

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& ps,
                                            const Metadata& metadata = {});

/// Errors: bad_magic ("not a PADA checkpoint"), bad_version, truncated
/// ("truncated tensor data" for a short payload) and format for
/// malformed records or trailing bytes.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ParameterSet& ps, const std::filesystem::path& path,
                     const Metadata& metadata = {});
ParameterSet load_checkpoint(const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace pada
