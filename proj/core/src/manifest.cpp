#include "thermoeq/manifest.hpp"

#include <ctime>
#include <fstream>

#include <json.hpp>

#include "thermoeq/errors.hpp"

namespace thermoeq {

using nlohmann::json;

std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

RunManifest make_manifest(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
    RunManifest m;
    m.config_hash = config_digest(cfg);
    m.seeds = seeds;
    m.started_at = iso8601_utc_now();
    return m;
}

std::string manifest_to_json(const RunManifest& m) {
    json j{{"config_hash", m.config_hash},
           {"seeds", m.seeds},
           {"artifact_version", m.artifact_version},
           {"started_at", m.started_at},
           {"finished_at", m.finished_at},
           {"outputs", m.outputs}};
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("manifest is not valid JSON: ") + e.what());
    }
    RunManifest m;
    try {
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        m.artifact_version = j.at("artifact_version").get<std::string>();
        m.started_at = j.at("started_at").get<std::string>();
        m.finished_at = j.at("finished_at").get<std::string>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw IoError(std::string("manifest is missing a required field: ") + e.what());
    }
    return m;
}

void save_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    out << manifest_to_json(m);
    if (!out) throw IoError("write failure on manifest: " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on manifest: " + path);
    return manifest_from_json(text);
}

} // namespace thermoeq
