#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stigmergy/errors.hpp"

namespace stigmergy {

inline constexpr const char* artifact_version = "0.1.0";

// Locale-independent compact formatting for CSV output.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw numeric_error("cannot open output file '" + path.string() + "'");
    out << content;
    if (!out) throw numeric_error("failed writing '" + path.string() + "'");
}

// Wall-clock seconds, unless SOURCE_DATE_EPOCH pins a reproducible instant.
inline std::time_t run_clock() {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const unsigned long long value = std::strtoull(epoch, &end, 10);
        if (end && *end == '\0') return static_cast<std::time_t>(value);
    }
    return std::time(nullptr);
}

inline std::string iso8601_utc(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Run manifest, emitted into every run directory whether the run succeeds
// or fails.
struct RunManifest {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string subcommand;
    std::string started;
    std::string finished;
    std::string status; // "success", "config-error", "runtime-error"
    std::string error;  // empty on success
    std::vector<std::string> outputs;
};

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    nlohmann::json j{
        {"artifact_version", artifact_version},
        {"seed", manifest.seed},
        {"config_digest", manifest.config_digest},
        {"subcommand", manifest.subcommand},
        {"started", manifest.started},
        {"finished", manifest.finished},
        {"status", manifest.status},
        {"outputs", manifest.outputs},
    };
    if (!manifest.error.empty()) j["error"] = manifest.error;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

} // namespace stigmergy
