#pragma once

// Output helpers shared by the CLI subcommands: stable float formatting,
// CSV writing, file digests, and the run manifest.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grpkmax/types.hpp"
#include "grpkmax/version.hpp"

namespace cli {

using nlohmann::json;

/// Shortest-exact decimal form; stable across runs for byte-identical CSVs.
inline std::string fmt(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

inline std::string fmt(grpkmax::Index v) { return std::to_string(v); }

struct CsvWriter {
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) {
            throw grpkmax::ParseError("cannot open '" + path.string() +
                                      "' for writing");
        }
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }
    std::ofstream out_;
};

inline std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw grpkmax::ParseError("cannot open '" + path + "' for digest");
    }
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return hash;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Every subcommand records its resolved configuration and input digests;
/// `--from-manifest` replays the run from this file.
inline void write_manifest(const std::filesystem::path& out_dir,
                           const std::string& subcommand, const json& config,
                           const std::vector<std::string>& input_paths) {
    json manifest;
    manifest["artifact_version"] = grpkmax::kVersion;
    manifest["subcommand"] = subcommand;
    manifest["timestamp"] = utc_timestamp();
    manifest["config"] = config;
    json inputs = json::object();
    for (const auto& p : input_paths) {
        inputs[p] = {{"fnv1a64", hex64(fnv1a64_file(p))}};
    }
    manifest["inputs"] = inputs;
    std::ofstream out(out_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

inline std::string join(const std::vector<grpkmax::Index>& v, char sep = ';') {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << sep;
        ss << v[i];
    }
    return ss.str();
}

}  // namespace cli
