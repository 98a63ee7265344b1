#pragma once

#include "crowdtrack/coords.hpp"
#include "crowdtrack/foreground.hpp"

#include <span>
#include <vector>

namespace crowdtrack {

/// Entry/exit zone modelled as a Gaussian over pixel coordinates. Pixels whose
/// density exceeds the density at `membership_sigma` Mahalanobis units belong to it.
struct RedRegion {
    Vec2 mu = Vec2::Zero();
    Mat2 sigma = Mat2::Identity();
    double membership_sigma = 2.0;

    void validate() const;
    [[nodiscard]] double density(const Vec2& pixel) const;
    [[nodiscard]] double membership_threshold() const;
    [[nodiscard]] bool contains(const Vec2& pixel) const;
};

struct LifecycleParams {
    double threshold = 0.5;       ///< Thr
    double pixel_constant = 300;  ///< Delta_p, pixels
    double distance_constant = 0.5;  ///< Delta_d, metres

    void validate() const;
};

/// Measurements found inside the red region, grouped as one cluster.
struct RegionCluster {
    std::vector<std::size_t> members;  ///< indices into the frame
    Vec2 centroid = Vec2::Zero();      ///< pixels

    [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
    [[nodiscard]] bool empty() const noexcept { return members.empty(); }
};

[[nodiscard]] RegionCluster red_region_cluster(const FrameMeasurements& frame, const RedRegion& region);
/// Union over several (possibly disjoint) regions.
[[nodiscard]] RegionCluster red_region_cluster(const FrameMeasurements& frame, std::span<const RedRegion> regions);

/// 1 - exp(-N_p / Delta_p).
[[nodiscard]] double p_region_cluster(std::size_t pixel_count, const LifecycleParams& params);

/// exp(-d_min / Delta_d) with d_min the ground distance from the region
/// cluster centroid to the nearest existing target; 0 without targets.
[[nodiscard]] double p_existing_target(const Vec2& centroid_ground, std::span<const Vec2> target_ground,
                                       const LifecycleParams& params);

[[nodiscard]] double p_death(std::size_t pixel_count, const Vec2& centroid_ground,
                             std::span<const Vec2> target_ground, const LifecycleParams& params);
[[nodiscard]] double p_birth(std::size_t pixel_count, const Vec2& centroid_ground,
                             std::span<const Vec2> target_ground, const LifecycleParams& params);

struct CountUpdate {
    int new_count = 0;
    int change = 0;  ///< -1, 0 or +1
};

/// -1 if death dominates and exceeds Thr, +1 if birth does, 0 otherwise. A
/// death is never applied to an empty scene.
[[nodiscard]] CountUpdate update_count(int previous_count, double p_birth, double p_death, const LifecycleParams& params);

}  // namespace crowdtrack
