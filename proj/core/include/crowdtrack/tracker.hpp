#pragma once

#include "crowdtrack/association.hpp"
#include "crowdtrack/coords.hpp"
#include "crowdtrack/foreground.hpp"
#include "crowdtrack/lifecycle.hpp"
#include "crowdtrack/socialforce.hpp"
#include "crowdtrack/vbcluster.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crowdtrack {

struct TrackerConfig {
    int width = 640;
    int height = 480;
    long frames = 0;  ///< expected frame count, 0 = derive from input
    std::size_t particles = 60;
    double downsample_trigger = 0.80;  ///< metres
    int downsample_stride = 9;
    double bootstrap_merge_distance = 0.5;  ///< metres
    double birth_position_std = 0.05;       ///< metres
    double birth_velocity_std = 0.2;        ///< m/s
    /// A target becomes eligible for removal once it is outside every red
    /// region and farther than this from the red-region cluster (or that
    /// cluster is empty). Metres.
    double arm_distance = 1.0;

    ClusteringConfig clustering;
    LifecycleParams lifecycle;
    std::vector<RedRegion> red_regions;
    ForceParams social_force;
    /// Clutter density defaults to a uniform density over the 640x480 frame.
    AssociationParams association{.clutter_density = 1.0 / (640.0 * 480.0)};

    void validate() const;
};

struct Target {
    int id = 0;
    std::vector<GroundState> particles;
    std::vector<double> weights;
    GroundState estimate;
    Vec2 pixel = Vec2::Zero();
    ColorHistogram reference;
    long birth_frame = 0;
    /// Set once the target has left the red regions (see `arm_distance`); only
    /// armed targets can be removed by the death rule.
    bool armed = false;
    Rng rng;
};

/// Builds a new target at the centroid of `members` (pixels of `frame`).
/// Throws EmptyBirthCluster.
[[nodiscard]] Target spawn_target(int id, const FrameMeasurements& frame, std::span<const std::size_t> members,
                                  const Homography& homography, const TrackerConfig& config, std::uint64_t seed,
                                  long frame_index);

/// Normalises exp(log_likelihoods) into the particle weights and sets the MMSE
/// estimate. Returns false (and uses uniform weights) if every likelihood is zero.
bool weight_and_estimate(Target& target, std::span<const double> log_likelihoods, const Homography& homography);

/// Systematic resampling followed by a random permutation; weights become uniform.
void systematic_resample(Target& target);

struct TargetEstimate {
    int id = 0;
    Vec2 ground = Vec2::Zero();
    Vec2 pixel = Vec2::Zero();
};

struct FrameDiagnostics {
    double lower_bound = 0.0;
    int vb_iterations = 0;
    std::size_t hypotheses = 0;
    std::size_t measurements = 0;
    std::size_t measurements_clustered = 0;
    bool downsampled = false;
    double p_birth = 0.0;
    double p_death = 0.0;
    int count_change = 0;
    bool degraded = false;
    std::string degraded_reason;
    double wall_ms = 0.0;
};

struct FrameResult {
    long frame_index = 0;
    std::vector<TargetEstimate> estimates;  ///< sorted by id
    std::size_t target_count = 0;
    FrameMeasurements clustered_frame;
    ClusterSet clusters;
    AssociationMatrix association;
    std::vector<int> association_target_ids;  ///< row i of `association` belongs to this id
    FrameDiagnostics diagnostics;
};

/// Per-frame pipeline: prediction, clustering, target-count update, data
/// association, weighting, estimation and resampling. One instance per sequence.
class Tracker {
public:
    Tracker(TrackerConfig config, Homography homography, std::uint64_t seed);

    FrameResult step(const FrameMeasurements& frame);

    [[nodiscard]] const std::vector<Target>& targets() const noexcept { return targets_; }
    [[nodiscard]] const TrackerConfig& config() const noexcept { return config_; }
    [[nodiscard]] const Homography& homography() const noexcept { return homography_; }

    /// Test hook: treat every target as undetected so step() reduces to prediction.
    void force_undetected(bool on) noexcept { force_undetected_ = on; }

private:
    void bootstrap(const FrameMeasurements& clustered, const ClusterSet& clusters, FrameResult& result);
    void update_count(const FrameMeasurements& frame, FrameResult& result);
    void associate_and_update(const FrameMeasurements& clustered, const ClusterSet& clusters,
                              std::span<const int> newborn, FrameResult& result);
    [[nodiscard]] bool in_red_region(const Vec2& pixel) const;
    void arm_targets(const FrameMeasurements& frame);

    TrackerConfig config_;
    Homography homography_;
    std::uint64_t seed_;
    std::vector<Target> targets_;
    std::vector<Vec2> ghosts_;  ///< ground positions of targets removed while their blob is still in the region
    int next_id_ = 1;
    bool bootstrapped_ = false;
    bool force_undetected_ = false;
};

}  // namespace crowdtrack
