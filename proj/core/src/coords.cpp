#include "crowdtrack/coords.hpp"

#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace crowdtrack {

namespace {

constexpr double kMinHomogeneousScale = 1e-12;
constexpr double kMinDeterminant = 1e-12;

Vec2 apply(const Eigen::Matrix3d& h, const Vec2& p) {
    if (!p.allFinite()) {
        throw Error(ErrorKind::PointAtInfinity, "non-finite input point");
    }
    const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < kMinHomogeneousScale) {
        throw Error(ErrorKind::PointAtInfinity,
                    fmt::format("homogeneous scale {} at ({}, {})", q.z(), p.x(), p.y()));
    }
    return {q.x() / q.z(), q.y() / q.z()};
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

}  // namespace

Homography::Homography() : forward_(Eigen::Matrix3d::Identity()), inverse_(Eigen::Matrix3d::Identity()) {}

Homography::Homography(const Eigen::Matrix3d& pixel_to_ground) {
    if (!pixel_to_ground.allFinite() || std::abs(pixel_to_ground(2, 2)) < kMinHomogeneousScale) {
        throw Error(ErrorKind::DegenerateConfiguration, "homography must have nonzero H(2,2)");
    }
    forward_ = pixel_to_ground / pixel_to_ground(2, 2);
    if (std::abs(forward_.determinant()) <= kMinDeterminant) {
        throw Error(ErrorKind::DegenerateConfiguration, "homography is not invertible");
    }
    inverse_ = forward_.inverse();
}

Vec2 Homography::pixel_to_ground(const Vec2& pixel) const { return apply(forward_, pixel); }

Vec2 Homography::ground_to_pixel(const Vec2& ground) const { return apply(inverse_, ground); }

Vec2 Homography::pixel_velocity_to_ground(const Vec2& pixel, const Vec2& pixel_velocity,
                                          double dt) const {
    return (pixel_to_ground(pixel + pixel_velocity * dt) - pixel_to_ground(pixel)) / dt;
}

Vec2 Homography::ground_velocity_to_pixel(const Vec2& ground, const Vec2& ground_velocity,
                                          double dt) const {
    return (ground_to_pixel(ground + ground_velocity * dt) - ground_to_pixel(ground)) / dt;
}

Homography homography_from_points(std::span<const CalibrationPair, 4> pairs) {
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            for (std::size_t c = b + 1; c < 4; ++c) {
                const auto& pa = pairs[a].pixel;
                const auto& pb = pairs[b].pixel;
                const auto& pc = pairs[c].pixel;
                const double scale = std::max({(pb - pa).norm(), (pc - pa).norm(), 1.0});
                if (std::abs(signed_area(pa, pb, pc)) <= 1e-12 * scale * scale) {
                    throw Error(ErrorKind::DegenerateConfiguration,
                                fmt::format("calibration pixels {}, {}, {} are collinear", a, b, c));
                }
            }
        }
    }

    // Unknowns h00 h01 h02 h10 h11 h12 h20 h21 with h22 = 1.
    Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> rhs;
    for (std::size_t i = 0; i < 4; ++i) {
        const double x = pairs[i].pixel.x();
        const double y = pairs[i].pixel.y();
        const double u = pairs[i].ground.x();
        const double v = pairs[i].ground.y();
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(r + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        rhs(r) = u;
        rhs(r + 1) = v;
    }
    const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::DegenerateConfiguration, "calibration system is singular");
    }
    const Eigen::Matrix<double, 8, 1> h = lu.solve(rhs);
    Eigen::Matrix3d m;
    m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    return Homography(m);
}

std::array<CalibrationPair, 4> load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, fmt::format("cannot open calibration file '{}'", path.string()));
    }
    std::array<CalibrationPair, 4> pairs{};
    std::size_t count = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_csv_line(line);
        if (fields.empty() || (fields.size() == 1 && fields[0].empty())) {
            continue;
        }
        if (fields.size() != 4) {
            throw Error(ErrorKind::MalformedInput,
                        fmt::format("{}:{}: expected 4 fields, got {}", path.string(), line_no, fields.size()));
        }
        double values[4];
        bool numeric = true;
        for (std::size_t i = 0; i < 4; ++i) {
            numeric = numeric && parse_double(fields[i], values[i]);
        }
        if (!numeric) {
            if (line_no == 1) {
                continue;  // header
            }
            throw Error(ErrorKind::MalformedInput,
                        fmt::format("{}:{}: non-numeric calibration row", path.string(), line_no));
        }
        if (count == 4) {
            throw Error(ErrorKind::MalformedInput,
                        fmt::format("{}: more than 4 calibration rows", path.string()));
        }
        pairs[count++] = CalibrationPair{Vec2(values[0], values[1]), Vec2(values[2], values[3])};
    }
    if (count != 4) {
        throw Error(ErrorKind::MalformedInput,
                    fmt::format("{}: expected 4 calibration rows, got {}", path.string(), count));
    }
    return pairs;
}

void save_calibration(const std::filesystem::path& path, std::span<const CalibrationPair, 4> pairs) {
    CsvWriter out(path, "px,py,gx,gy");
    for (const auto& p : pairs) {
        out.row(fmt::format("{},{},{},{}", p.pixel.x(), p.pixel.y(), p.ground.x(), p.ground.y()));
    }
    out.close();
}

}  // namespace crowdtrack
