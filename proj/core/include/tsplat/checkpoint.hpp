#pragma once

#include "tsplat/config.hpp"
#include "tsplat/mixture.hpp"
#include "tsplat/sghmc.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace tsplat {

struct Checkpoint {
    Mixture mixture;
    SamplerState state;
    TrainConfig config;
    std::int64_t iteration = 0;
    double extent = 1.0;

    /// FNV-1a of the serialized config, as 16 hex digits.
    std::string config_hash() const;
};

/// Canonical JSON text of a config; stable field order.
std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const std::string& text);

/// Single JSON document; doubles are written as shortest round-trip decimals, so
/// serialize(deserialize(s)) == s.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws std::runtime_error on I/O failure, malformed content or a config hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tsplat
