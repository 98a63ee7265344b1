#include "crowdtrack/error.hpp"
#include "crowdtrack/foreground.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace crowdtrack {
namespace {

FrameMeasurements grid_frame(std::size_t count) {
    FrameMeasurements f;
    f.frame_index = 3;
    for (std::size_t k = 0; k < count; ++k) {
        f.measurements.push_back({static_cast<int>(k % 200), static_cast<int>(k / 200), 1, 2, 3});
    }
    return f;
}

TEST(Subtractor, DetectsChangedPixelsOnly) {
    RgbImage bg(4, 3, {100, 100, 100});
    RgbImage frame = bg;
    frame.at(1, 1) = {250, 250, 250};  // bright highlight
    frame.at(2, 2) = {100, 100, 110};  // small change below epsilon
    frame.at(3, 0) = {60, 60, 60};     // shadow within [alpha, beta]
    const auto out = subtract_background(frame, bg, SubtractorParams{}, 9);
    ASSERT_EQ(out.measurements.size(), 1u);
    EXPECT_EQ(out.frame_index, 9);
    EXPECT_EQ(out.measurements[0], (Measurement{1, 1, 250, 250, 250}));
}

TEST(Subtractor, DarkObjectIsForeground) {
    RgbImage bg(2, 1, {200, 200, 200});
    RgbImage frame = bg;
    frame.at(0, 0) = {20, 20, 20};  // ratio 0.1 < alpha
    EXPECT_EQ(subtract_background(frame, bg, SubtractorParams{}).measurements.size(), 1u);
}

TEST(Subtractor, SizeMismatchThrows) {
    try {
        (void)subtract_background(RgbImage(2, 2), RgbImage(3, 2), SubtractorParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

TEST(Downsample, KeepsEveryNinthPixelWhenTargetsAreClose) {
    const auto frame = grid_frame(17792);
    const auto out = downsample(frame, 0.5, 9);
    // ceil(17792 / 9)
    EXPECT_EQ(out.measurements.size(), 1977u);
    EXPECT_EQ(out.stride, 9);
    EXPECT_EQ(out.measurements[1], frame.measurements[9]);
}

TEST(Downsample, LeavesFrameAloneWhenTargetsAreApart) {
    const auto frame = grid_frame(500);
    EXPECT_EQ(downsample(frame, 0.81, 9).measurements.size(), 500u);
    EXPECT_EQ(downsample(frame, 0.5, 1).measurements.size(), 500u);
}

TEST(Downsample, IsIdempotent) {
    const auto once = downsample(grid_frame(1000), 0.1, 9);
    const auto twice = downsample(once, 0.1, 9);
    EXPECT_EQ(once.measurements, twice.measurements);
}

TEST(Downsample, SortsByRowThenColumn) {
    FrameMeasurements f;
    f.measurements = {{5, 2}, {1, 0}, {3, 1}, {0, 0}};
    const auto out = downsample(f, 0.0, 2);
    ASSERT_EQ(out.measurements.size(), 2u);
    EXPECT_EQ(out.measurements[0].x, 0);
    EXPECT_EQ(out.measurements[1].x, 3);
}

TEST(MeasurementFile, RoundTripWithEmptyFrames) {
    const auto path = std::filesystem::temp_directory_path() / "crowdtrack_measurements_test.csv";
    std::vector<FrameMeasurements> frames(4);
    for (long k = 0; k < 4; ++k) {
        frames[static_cast<std::size_t>(k)].frame_index = k;
    }
    frames[1].measurements = {{10, 20, 1, 2, 3}, {11, 20, 4, 5, 6}};
    frames[3].measurements = {{0, 0, 255, 0, 0}};
    save_measurements(path, frames);
    const auto loaded = load_measurements(path, 6);
    ASSERT_EQ(loaded.size(), 6u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(loaded[k].frame_index, static_cast<long>(k));
        EXPECT_EQ(loaded[k].measurements, frames[k].measurements);
    }
    EXPECT_TRUE(loaded[5].measurements.empty());
    std::filesystem::remove(path);
}

TEST(MeasurementFile, DecreasingFramesAreMalformed) {
    const auto path = std::filesystem::temp_directory_path() / "crowdtrack_measurements_bad.csv";
    {
        std::ofstream out(path);
        out << "frame,x,y,r,g,b\n2,1,1,0,0,0\n1,1,1,0,0,0\n";
    }
    try {
        (void)load_measurements(path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedInput);
    }
    std::filesystem::remove(path);
}

}  // namespace
}  // namespace crowdtrack
