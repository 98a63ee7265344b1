#include "crowdtrack/coords.hpp"
#include "crowdtrack/error.hpp"

#include <gtest/gtest.h>

#include <array>
#include <filesystem>

namespace crowdtrack {
namespace {

std::array<CalibrationPair, 4> scale_two_pairs() {
    // Every pixel coordinate is twice the ground coordinate.
    return {{{Vec2(0, 0), Vec2(0, 0)}, {Vec2(2, 0), Vec2(1, 0)}, {Vec2(2, 2), Vec2(1, 1)}, {Vec2(0, 2), Vec2(0, 1)}}};
}

TEST(Homography, IdentityByDefault) {
    const Homography h;
    const Vec2 p(123.5, -7.25);
    EXPECT_TRUE(h.pixel_to_ground(p).isApprox(p));
    EXPECT_TRUE(h.ground_to_pixel(p).isApprox(p));
}

TEST(Homography, FourPointScaleMap) {
    const auto pairs = scale_two_pairs();
    const Homography h = homography_from_points(pairs);
    EXPECT_NEAR(h.matrix()(2, 2), 1.0, 1e-15);
    const Vec2 g = h.pixel_to_ground(Vec2(10.0, 4.0));
    EXPECT_NEAR(g.x(), 5.0, 1e-12);
    EXPECT_NEAR(g.y(), 2.0, 1e-12);
    const Vec2 p = h.ground_to_pixel(Vec2(-3.0, 0.5));
    EXPECT_NEAR(p.x(), -6.0, 1e-12);
    EXPECT_NEAR(p.y(), 1.0, 1e-12);
}

TEST(Homography, ReproducesCalibrationPoints) {
    const std::array<CalibrationPair, 4> pairs{{{Vec2(80, 440), Vec2(0, 0)},
                                                {Vec2(560, 440), Vec2(6, 0)},
                                                {Vec2(520, 60), Vec2(6, 5)},
                                                {Vec2(120, 60), Vec2(0, 5)}}};
    const Homography h = homography_from_points(pairs);
    for (const auto& pr : pairs) {
        EXPECT_LT((h.pixel_to_ground(pr.pixel) - pr.ground).norm(), 1e-9);
        EXPECT_LT((h.ground_to_pixel(pr.ground) - pr.pixel).norm(), 1e-7);
    }
}

TEST(Homography, CollinearPointsAreDegenerate) {
    const std::array<CalibrationPair, 4> pairs{{{Vec2(0, 0), Vec2(0, 0)},
                                                {Vec2(1, 1), Vec2(1, 0)},
                                                {Vec2(2, 2), Vec2(1, 1)},
                                                {Vec2(0, 5), Vec2(0, 1)}}};
    try {
        (void)homography_from_points(pairs);
        FAIL() << "expected DegenerateConfiguration";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateConfiguration);
    }
}

TEST(Homography, SingularMatrixRejected) {
    try {
        (void)Homography(Eigen::Matrix3d::Zero());
        FAIL() << "expected DegenerateConfiguration";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateConfiguration);
    }
}

TEST(Homography, HorizonPointIsAtInfinity) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(2, 0) = 1.0;  // w = x + 1 vanishes at x = -1
    const Homography h(m);
    try {
        (void)h.pixel_to_ground(Vec2(-1.0, 3.0));
        FAIL() << "expected PointAtInfinity";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PointAtInfinity);
    }
}

TEST(Homography, VelocityConversionUnderScaleMap) {
    const Homography h = homography_from_points(scale_two_pairs());
    const Vec2 v = h.pixel_velocity_to_ground(Vec2(4, 4), Vec2(2.0, -1.0), 0.04);
    EXPECT_NEAR(v.x(), 1.0, 1e-9);
    EXPECT_NEAR(v.y(), -0.5, 1e-9);
    const Vec2 back = h.ground_velocity_to_pixel(Vec2(2, 2), v, 0.04);
    EXPECT_NEAR(back.x(), 2.0, 1e-9);
    EXPECT_NEAR(back.y(), -1.0, 1e-9);
}

TEST(Calibration, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "crowdtrack_calibration_test.csv";
    const auto pairs = scale_two_pairs();
    save_calibration(path, pairs);
    const auto loaded = load_calibration(path);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(loaded[i].pixel, pairs[i].pixel);
        EXPECT_EQ(loaded[i].ground, pairs[i].ground);
    }
    std::filesystem::remove(path);
}

}  // namespace
}  // namespace crowdtrack
