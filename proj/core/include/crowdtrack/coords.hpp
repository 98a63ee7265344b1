#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <span>

namespace crowdtrack {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// One pixel/ground correspondence used to fit the image-to-ground-plane map.
struct CalibrationPair {
    Vec2 pixel;   ///< (px, py) in pixels
    Vec2 ground;  ///< (gx, gy) in metres
};

/// Planar projective map from pixel coordinates to ground-plane metres.
/// The forward matrix is normalized so that H(2,2) == 1; the inverse is cached.
class Homography {
public:
    /// Identity map.
    Homography();

    /// Throws DegenerateConfiguration when the matrix is not invertible.
    explicit Homography(const Eigen::Matrix3d& pixel_to_ground);

    [[nodiscard]] const Eigen::Matrix3d& matrix() const noexcept { return forward_; }
    [[nodiscard]] const Eigen::Matrix3d& inverse() const noexcept { return inverse_; }

    /// Throws PointAtInfinity when the homogeneous scale vanishes.
    [[nodiscard]] Vec2 pixel_to_ground(const Vec2& pixel) const;
    [[nodiscard]] Vec2 ground_to_pixel(const Vec2& ground) const;

    /// Velocity conversion by differencing transformed positions over dt.
    [[nodiscard]] Vec2 pixel_velocity_to_ground(const Vec2& pixel, const Vec2& pixel_velocity,
                                                double dt) const;
    [[nodiscard]] Vec2 ground_velocity_to_pixel(const Vec2& ground, const Vec2& ground_velocity,
                                                double dt) const;

private:
    Eigen::Matrix3d forward_;
    Eigen::Matrix3d inverse_;
};

/// Four-point direct solve. Throws DegenerateConfiguration when three pixel
/// points are collinear or the 8x8 system is singular.
[[nodiscard]] Homography homography_from_points(std::span<const CalibrationPair, 4> pairs);

/// Reads 4 CSV lines `px,py,gx,gy` (an optional header line is skipped).
[[nodiscard]] std::array<CalibrationPair, 4> load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, std::span<const CalibrationPair, 4> pairs);

}  // namespace crowdtrack
