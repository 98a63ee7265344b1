#pragma once

#include "crowdtrack/metrics.hpp"
#include "crowdtrack/tracker.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace crowdtrack {

/// Everything a tracking or evaluation run reads from its INI file.
///
/// Sections: [tracker] [lifecycle] [red_region] (further regions as
/// [red_region_2], [red_region_3], ...) [social_force] [clustering]
/// [association] [metrics]. Every section and key is optional; unknown
/// sections or keys are rejected.
struct RunConfig {
    TrackerConfig tracker;
    MetricsConfig metrics;

    void validate() const;
};

/// Throws ConfigInvalid (bad syntax, unknown key, invalid value) or Io.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
[[nodiscard]] RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");

/// Emits every key, so the output documents all defaults and round-trips.
[[nodiscard]] std::string format_config(const RunConfig& config);
void save_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace crowdtrack
