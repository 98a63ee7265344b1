#include "plot.hpp"

#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace crowdtrack::cli {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 400;
constexpr double kMargin = 50;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

SeriesTable read_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::MalformedInput, fmt::format("{}: missing header row", path.string()));
    }
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "frame") {
        throw Error(ErrorKind::MalformedInput, fmt::format("{}: first column must be 'frame'", path.string()));
    }
    SeriesTable t;
    for (std::size_t i = 1; i < header.size(); ++i) {
        t.names.emplace_back(header[i]);
    }
    t.values.resize(t.names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        const auto fields = split_csv_line(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedInput, fmt::format("{}: row {}: expected {} fields, got {}",
                                                               path.string(), row, header.size(), fields.size()));
        }
        double frame = 0;
        if (!parse_double(fields[0], frame)) {
            throw Error(ErrorKind::MalformedInput, fmt::format("{}: row {}: bad frame '{}'", path.string(), row,
                                                               fields[0]));
        }
        t.frames.push_back(frame);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!fields[i].empty() && fields[i] != "nan" && !parse_double(fields[i], v)) {
                throw Error(ErrorKind::MalformedInput, fmt::format("{}: row {}: field {} ('{}') is not a number",
                                                                   path.string(), row, i + 1, fields[i]));
            }
            t.values[i - 1].push_back(v);
        }
    }
    return t;
}

std::string render_svg(const SeriesTable& table, const std::string& title) {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool any = false;
    for (std::size_t s = 0; s < table.values.size(); ++s) {
        for (std::size_t k = 0; k < table.frames.size(); ++k) {
            const double v = table.values[s][k];
            if (std::isnan(v)) {
                continue;
            }
            if (!any) {
                x0 = x1 = table.frames[k];
                y0 = y1 = v;
                any = true;
            }
            x0 = std::min(x0, table.frames[k]);
            x1 = std::max(x1, table.frames[k]);
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    }
    y0 = std::min(y0, 0.0);
    if (x1 <= x0) {
        x1 = x0 + 1;
    }
    if (y1 <= y0) {
        y1 = y0 + 1;
    }
    auto sx = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
    auto sy = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{3}</text>\n",
        kWidth, kHeight, kMargin, escape(title));
    svg += fmt::format(
        "<g stroke=\"black\" stroke-width=\"1\">"
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/><line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\"/></g>\n",
        kMargin, kHeight - kMargin, kWidth - kMargin, kMargin);
    svg += fmt::format(
        "<g font-family=\"sans-serif\" font-size=\"11\">"
        "<text x=\"{0}\" y=\"{1}\">{2:g}</text><text x=\"{3}\" y=\"{1}\" text-anchor=\"end\">{4:g}</text>"
        "<text x=\"{5}\" y=\"{6}\" text-anchor=\"end\">{7:g}</text><text x=\"{5}\" y=\"{8}\" text-anchor=\"end\">{9:g}</text>"
        "<text x=\"{10}\" y=\"{1}\" text-anchor=\"middle\">frame</text></g>\n",
        kMargin, kHeight - kMargin + 15, x0, kWidth - kMargin, x1, kMargin - 4, kHeight - kMargin, y0, kMargin + 4, y1,
        kWidth / 2);

    for (std::size_t s = 0; s < table.values.size(); ++s) {
        const char* colour = kPalette[s % kPalette.size()];
        std::string points;
        for (std::size_t k = 0; k < table.frames.size(); ++k) {
            const double v = table.values[s][k];
            if (!std::isnan(v)) {
                points += fmt::format("{:.2f},{:.2f} ", sx(table.frames[k]), sy(v));
            }
        }
        if (!points.empty()) {
            points.pop_back();
        }
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour,
                           points);
        svg += fmt::format(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\" "
            "text-anchor=\"end\">{}</text>\n",
            kWidth - kMargin - 4, kMargin + 14.0 * static_cast<double>(s), colour, escape(table.names[s]));
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace crowdtrack::cli
