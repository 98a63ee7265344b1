#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace crowdtrack::cli {

/// Columns of a `frame,...` CSV; NaN marks a missing value.
struct SeriesTable {
    std::vector<std::string> names;
    std::vector<double> frames;
    std::vector<std::vector<double>> values;  ///< one vector per name
};

/// Reads any CSV whose first column is `frame`. Throws MalformedInput.
[[nodiscard]] SeriesTable read_series(const std::filesystem::path& path);

/// Standalone SVG line plot, one polyline per series.
[[nodiscard]] std::string render_svg(const SeriesTable& table, const std::string& title);

}  // namespace crowdtrack::cli
