#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace crowdtrack {

/// One foreground pixel: image coordinates plus its colour.
struct Measurement {
    int x = 0;
    int y = 0;
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct FrameMeasurements {
    long frame_index = 0;
    std::vector<Measurement> measurements;
    int stride = 1;  ///< decimation already applied; downsample() leaves such frames alone
};

/// Dense RGB image, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::array<std::uint8_t, 3>> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    [[nodiscard]] std::array<std::uint8_t, 3>& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] const std::array<std::uint8_t, 3>& at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

/// Thresholds of the static-background subtractor.
struct SubtractorParams {
    double color_threshold = 20.0;  ///< epsilon: minimum RGB Euclidean distance
    double shadow_bound = 0.5;      ///< alpha: lower brightness-ratio bound
    double highlight_bound = 2.0;   ///< beta: upper brightness-ratio bound

    void validate() const;
};

/// Pixels whose colour distance to the background exceeds epsilon and whose
/// brightness ratio |frame| / |background| lies outside [alpha, beta].
/// Throws DimensionMismatch if the two images differ in size.
[[nodiscard]] FrameMeasurements subtract_background(const RgbImage& frame, const RgbImage& background,
                                                    const SubtractorParams& params, long frame_index = 0);

struct DownsampleParams {
    double trigger_distance = 0.80;  ///< metres
    int stride = 9;
};

/// Keeps every stride-th measurement in (y, x) order once the closest pair of
/// targets is within the trigger distance; otherwise returns the input unchanged.
/// A frame already decimated by the same stride is returned as-is.
[[nodiscard]] FrameMeasurements downsample(const FrameMeasurements& frame, double min_inter_target_distance,
                                           int stride, double trigger_distance = 0.80);

/// Reads a `frame,x,y,r,g,b` file. Frames must be nondecreasing; frames without
/// rows are emitted as empty entries. `frame_count` (if > 0) pads trailing empties.
[[nodiscard]] std::vector<FrameMeasurements> load_measurements(const std::filesystem::path& path,
                                                               long frame_count = 0);
void save_measurements(const std::filesystem::path& path, const std::vector<FrameMeasurements>& frames);

}  // namespace crowdtrack
