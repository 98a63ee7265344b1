#include "crowdtrack/lifecycle.hpp"

#include "crowdtrack/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace crowdtrack {

void RedRegion::validate() const {
    if (!sigma.allFinite() || !(sigma(0, 0) > 0.0) || !(sigma.determinant() > 0.0) ||
        std::abs(sigma(0, 1) - sigma(1, 0)) > 1e-9 || !(membership_sigma > 0.0)) {
        throw Error(ErrorKind::ConfigInvalid, "red region covariance must be SPD");
    }
}

double RedRegion::density(const Vec2& pixel) const {
    const Vec2 d = pixel - mu;
    const double maha = d.dot(sigma.inverse() * d);
    return std::exp(-0.5 * maha) / (2.0 * std::numbers::pi * std::sqrt(sigma.determinant()));
}

double RedRegion::membership_threshold() const {
    return std::exp(-0.5 * membership_sigma * membership_sigma) /
           (2.0 * std::numbers::pi * std::sqrt(sigma.determinant()));
}

bool RedRegion::contains(const Vec2& pixel) const { return density(pixel) > membership_threshold(); }

void LifecycleParams::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0) || !(pixel_constant > 0.0) || !(distance_constant > 0.0)) {
        throw Error(ErrorKind::ConfigInvalid, "lifecycle parameters out of range");
    }
}

RegionCluster red_region_cluster(const FrameMeasurements& frame, const RedRegion& region) {
    return red_region_cluster(frame, std::span<const RedRegion>(&region, 1));
}

RegionCluster red_region_cluster(const FrameMeasurements& frame, std::span<const RedRegion> regions) {
    RegionCluster out;
    Vec2 sum = Vec2::Zero();
    for (std::size_t j = 0; j < frame.measurements.size(); ++j) {
        const Vec2 p(frame.measurements[j].x, frame.measurements[j].y);
        for (const auto& region : regions) {
            if (region.contains(p)) {
                out.members.push_back(j);
                sum += p;
                break;
            }
        }
    }
    if (!out.members.empty()) {
        out.centroid = sum / static_cast<double>(out.members.size());
    }
    return out;
}

double p_region_cluster(std::size_t pixel_count, const LifecycleParams& params) {
    return 1.0 - std::exp(-static_cast<double>(pixel_count) / params.pixel_constant);
}

double p_existing_target(const Vec2& centroid_ground, std::span<const Vec2> target_ground,
                         const LifecycleParams& params) {
    double d_min = std::numeric_limits<double>::infinity();
    for (const auto& t : target_ground) {
        d_min = std::min(d_min, (centroid_ground - t).norm());
    }
    if (!std::isfinite(d_min)) {
        return 0.0;
    }
    return std::exp(-d_min / params.distance_constant);
}

double p_death(std::size_t pixel_count, const Vec2& centroid_ground, std::span<const Vec2> target_ground,
               const LifecycleParams& params) {
    if (target_ground.empty()) {
        return 0.0;
    }
    return p_region_cluster(pixel_count, params) * p_existing_target(centroid_ground, target_ground, params);
}

double p_birth(std::size_t pixel_count, const Vec2& centroid_ground, std::span<const Vec2> target_ground,
               const LifecycleParams& params) {
    return p_region_cluster(pixel_count, params) *
           (1.0 - p_existing_target(centroid_ground, target_ground, params));
}

CountUpdate update_count(int previous_count, double p_birth_value, double p_death_value,
                         const LifecycleParams& params) {
    int change = 0;
    if (p_death_value > p_birth_value && p_death_value > params.threshold) {
        change = -1;
    } else if (p_birth_value > p_death_value && p_birth_value > params.threshold) {
        change = 1;
    }
    if (change < 0 && previous_count == 0) {
        change = 0;
    }
    return {previous_count + change, change};
}

}  // namespace crowdtrack
