#include "crowdtrack/foreground.hpp"

#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace crowdtrack {

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

void SubtractorParams::validate() const {
    if (!(color_threshold > 0.0) || !(shadow_bound > 0.0) || !(shadow_bound < 1.0) ||
        !(highlight_bound > 1.0)) {
        throw Error(ErrorKind::ConfigInvalid, "subtractor requires eps > 0 and 0 < alpha < 1 < beta");
    }
}

FrameMeasurements subtract_background(const RgbImage& frame, const RgbImage& background,
                                      const SubtractorParams& params, long frame_index) {
    if (frame.width != background.width || frame.height != background.height) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("frame {}x{} vs background {}x{}", frame.width, frame.height,
                                background.width, background.height));
    }
    params.validate();
    FrameMeasurements out;
    out.frame_index = frame_index;
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const auto& f = frame.at(x, y);
            const auto& b = background.at(x, y);
            double dist2 = 0.0;
            double fn2 = 0.0;
            double bn2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = double(f[c]) - double(b[c]);
                dist2 += d * d;
                fn2 += double(f[c]) * f[c];
                bn2 += double(b[c]) * b[c];
            }
            if (std::sqrt(dist2) <= params.color_threshold) {
                continue;
            }
            // A black background pixel makes any change a highlight.
            const bool outside = bn2 == 0.0 || [&] {
                const double ratio = std::sqrt(fn2 / bn2);
                return ratio < params.shadow_bound || ratio > params.highlight_bound;
            }();
            if (outside) {
                out.measurements.push_back({x, y, f[0], f[1], f[2]});
            }
        }
    }
    return out;
}

FrameMeasurements downsample(const FrameMeasurements& frame, double min_inter_target_distance, int stride,
                             double trigger_distance) {
    if (stride < 1) {
        throw Error(ErrorKind::ConfigInvalid, "downsample stride must be >= 1");
    }
    if (min_inter_target_distance > trigger_distance || stride == 1 || frame.stride == stride) {
        return frame;
    }
    std::vector<Measurement> sorted = frame.measurements;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Measurement& a, const Measurement& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    FrameMeasurements out;
    out.frame_index = frame.frame_index;
    out.stride = stride;
    out.measurements.reserve(sorted.size() / static_cast<std::size_t>(stride) + 1);
    for (std::size_t i = 0; i < sorted.size(); i += static_cast<std::size_t>(stride)) {
        out.measurements.push_back(sorted[i]);
    }
    return out;
}

std::vector<FrameMeasurements> load_measurements(const std::filesystem::path& path, long frame_count) {
    CsvReader reader(path, {"frame", "x", "y", "r", "g", "b"});
    std::vector<FrameMeasurements> frames;
    std::vector<std::string_view> f;
    long last = -1;
    while (reader.next(f)) {
        const long long frame = reader.field_int(f, 0);
        if (frame < 0) {
            reader.fail("negative frame index");
        }
        if (frame < last) {
            reader.fail(fmt::format("frame {} after frame {}: frames must be nondecreasing", frame, last));
        }
        while (static_cast<long>(frames.size()) <= frame) {
            frames.push_back(FrameMeasurements{static_cast<long>(frames.size()), {}});
        }
        last = static_cast<long>(frame);
        Measurement m;
        m.x = static_cast<int>(reader.field_int(f, 1));
        m.y = static_cast<int>(reader.field_int(f, 2));
        if (m.x < 0 || m.y < 0) {
            reader.fail("negative pixel coordinate");
        }
        std::uint8_t* channels[3] = {&m.r, &m.g, &m.b};
        for (int c = 0; c < 3; ++c) {
            const long long v = reader.field_int(f, static_cast<std::size_t>(3 + c));
            if (v < 0 || v > 255) {
                reader.fail("colour channel outside [0, 255]");
            }
            *channels[c] = static_cast<std::uint8_t>(v);
        }
        frames.back().measurements.push_back(m);
    }
    while (static_cast<long>(frames.size()) < frame_count) {
        frames.push_back(FrameMeasurements{static_cast<long>(frames.size()), {}});
    }
    return frames;
}

void save_measurements(const std::filesystem::path& path, const std::vector<FrameMeasurements>& frames) {
    CsvWriter out(path, "frame,x,y,r,g,b");
    for (const auto& frame : frames) {
        for (const auto& m : frame.measurements) {
            out.row(fmt::format("{},{},{},{},{},{}", frame.frame_index, m.x, m.y, int(m.r), int(m.g), int(m.b)));
        }
    }
    out.close();
}

}  // namespace crowdtrack
