#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermoeq/config.hpp"

namespace thermoeq {

/// Version stamp written into every manifest and report; bump on any change
/// to an output format.
inline constexpr const char* kArtifactVersion = "thermoeq-1";

/// Provenance record for one invocation. Everything except the two
/// timestamps is a pure function of (config, seeds), so reruns with the same
/// inputs produce byte-identical artifacts and a byte-identical manifest
/// modulo started_at / finished_at.
struct RunManifest {
    std::string config_hash;       // config_digest(cfg), 16 hex digits
    std::vector<std::uint64_t> seeds;
    std::string artifact_version = kArtifactVersion;
    std::string started_at;        // ISO-8601 UTC, e.g. 2026-01-31T12:00:00Z
    std::string finished_at;
    std::vector<std::string> outputs;  // paths of every artifact written
};

/// Current wall-clock time as an ISO-8601 UTC string.
std::string iso8601_utc_now();

RunManifest make_manifest(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& json_text);

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

} // namespace thermoeq
