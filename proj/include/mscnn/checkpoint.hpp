#pragma once

#include <filesystem>

#include "json.hpp"
#include "mscnn/network.hpp"

namespace mscnn {

/// Binary checkpoint layout (all integers little-endian):
///   "MSCN" | u32 version (=1) | u32 header length | UTF-8 JSON header |
///   per parameter, in declaration order: u32 rank, u32 extents..., f32 payload |
///   optionally the momentum buffers in the same layout and order.
/// The header carries config, seed, epoch, stats (decimal strings) and the
/// has_stats / has_momentum flags.
inline constexpr char kCheckpointMagic[4] = {'M', 'S', 'C', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const NetworkConfig& config);
/// Unknown keys raise ConfigError; missing keys keep their defaults.
NetworkConfig config_from_json(const nlohmann::json& j);

/// Writes atomically (temporary file + rename).
template <typename Scalar>
void save_checkpoint(const MultiscaleNet<Scalar>& net, const std::filesystem::path& path);

/// Throws BadMagicError, VersionError or TruncatedError for the respective
/// corruptions, CheckpointError for any other malformed content.
template <typename Scalar>
MultiscaleNet<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace mscnn
