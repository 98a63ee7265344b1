#pragma once

#include "crowdtrack/coords.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace crowdtrack {

/// One labelled ground-plane position at one frame (ground truth or estimate).
struct TrackPoint {
    long frame = 0;
    int id = 0;
    Vec2 ground = Vec2::Zero();
};

/// Point sets grouped by frame, each frame's points sorted by id.
using TrackSet = std::map<long, std::vector<TrackPoint>>;

[[nodiscard]] TrackSet group_by_frame(std::span<const TrackPoint> points);

struct OspamtParams {
    double cutoff = 80.0;  ///< c, centimetres
    double delta = 10.0;   ///< assignment parameter
    double order = 2.0;    ///< p

    void validate() const;
};

struct MetricsConfig {
    double match_threshold = 0.45;  ///< metres
    OspamtParams ospamt;

    void validate() const;
};

/// Ground-truth id -> estimate id correspondence carried between frames.
using Correspondence = std::map<int, int>;

struct FrameMatch {
    std::vector<std::pair<int, int>> matches;  ///< (gt id, est id)
    std::vector<double> distances;            ///< metres, parallel to matches
    int ground_truth = 0;
    int misses = 0;
    int false_positives = 0;
    int mismatches = 0;
};

/// CLEAR MOT matching for one frame. Correspondences from `carry` are kept
/// while both objects are present and within `threshold`; the rest are
/// matched by a distance-minimal assignment restricted to the threshold.
/// A gt object whose matched estimate id differs from its previous one counts
/// as a mismatch. `carry` is updated in place.
[[nodiscard]] FrameMatch match_frame(std::span<const TrackPoint> gt, std::span<const TrackPoint> est, double threshold,
                                     Correspondence& carry);

struct MotRates {
    double miss_rate = 0.0;
    double mismatch_rate = 0.0;
    double false_positive_rate = 0.0;
};

/// Ratios of summed per-frame errors to summed ground-truth objects. Throws NoGroundTruth.
[[nodiscard]] MotRates mot_rates(std::span<const FrameMatch> frames);

/// Mean matched distance in centimetres. Throws NoMatches.
[[nodiscard]] double motp(std::span<const FrameMatch> frames);

struct OspamtSeries {
    std::vector<long> frames;
    std::vector<double> loc;   ///< centimetres
    std::vector<double> card;  ///< centimetres
};

/// OSPAMT variant over the frame interval [first, last]. Every estimated track
/// is assigned to the ground-truth track of least whole-sequence cost, or left
/// unassigned when that is cheaper. Distances are in centimetres. Throws EmptyInterval.
[[nodiscard]] OspamtSeries ospamt(const TrackSet& gt, const TrackSet& est, long first, long last,
                                  const OspamtParams& params);

struct MotReport {
    std::vector<FrameMatch> frames;
    std::vector<long> frame_indices;
    MotRates rates;
    std::optional<double> motp_cm;
    std::vector<double> motp_cumulative;  ///< running MOTP per frame, cm (NaN before the first match)
    int total_mismatches = 0;
    OspamtSeries ospamt;
};

/// Full evaluation over the union of frames present in either set.
[[nodiscard]] MotReport evaluate(const TrackSet& gt, const TrackSet& est, const MetricsConfig& config);

/// `frame,id,gx,gy`
[[nodiscard]] std::vector<TrackPoint> load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const std::filesystem::path& path, std::span<const TrackPoint> points);

/// Reads the tracker output `frame,target_id,gx,gy,px,py` (pixel columns ignored).
[[nodiscard]] std::vector<TrackPoint> load_tracks(const std::filesystem::path& path);

}  // namespace crowdtrack
