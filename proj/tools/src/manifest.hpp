#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace crowdtrack::cli {

/// Hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

/// Record of one command invocation, written as manifest.json next to its outputs.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    /// Checksums every output and writes `<dir>/manifest.json` via a temporary file and rename.
    void write(const std::filesystem::path& dir) const;
};

}  // namespace crowdtrack::cli
