#include "crowdtrack/tracker.hpp"

#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace crowdtrack {

namespace {

constexpr double kFarAway = 1e9;

/// Pixel image of a ground point; points beyond the horizon map far outside the frame.
Vec2 project_or_far(const Homography& h, const Vec2& ground) {
    try {
        return h.ground_to_pixel(ground);
    } catch (const Error&) {
        return Vec2(kFarAway, kFarAway);
    }
}

GroundState particle_mean(const Target& t) {
    GroundState mean;
    const double w = 1.0 / static_cast<double>(t.particles.size());
    for (const auto& p : t.particles) {
        mean.position += w * p.position;
        mean.velocity += w * p.velocity;
    }
    return mean;
}

double min_pairwise_distance(std::span<const Vec2> points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            best = std::min(best, (points[i] - points[j]).norm());
        }
    }
    return best;
}

Points member_points(const FrameMeasurements& frame, std::span<const std::size_t> members) {
    Points pts(2, static_cast<Eigen::Index>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& m = frame.measurements[members[k]];
        pts(0, static_cast<Eigen::Index>(k)) = m.x;
        pts(1, static_cast<Eigen::Index>(k)) = m.y;
    }
    return pts;
}

}  // namespace

void TrackerConfig::validate() const {
    if (width <= 0 || height <= 0 || particles == 0 || downsample_stride < 1 || !(downsample_trigger >= 0) ||
        !(bootstrap_merge_distance >= 0) || !(arm_distance >= 0) || !(birth_position_std >= 0) || !(birth_velocity_std >= 0)) {
        throw Error(ErrorKind::ConfigInvalid, "tracker parameters out of range");
    }
    lifecycle.validate();
    social_force.validate();
    association.validate();
    for (const auto& r : red_regions) {
        r.validate();
    }
    if (clustering.max_iterations < 1 || !(clustering.tolerance > 0)) {
        throw Error(ErrorKind::ConfigInvalid, "clustering needs max_iterations >= 1 and tolerance > 0");
    }
}

Target spawn_target(int id, const FrameMeasurements& frame, std::span<const std::size_t> members,
                    const Homography& homography, const TrackerConfig& config, std::uint64_t seed, long frame_index) {
    if (members.empty()) {
        throw Error(ErrorKind::EmptyBirthCluster, "cannot spawn a target from an empty cluster");
    }
    Vec2 centroid = Vec2::Zero();
    for (auto j : members) {
        centroid += Vec2(frame.measurements.at(j).x, frame.measurements.at(j).y);
    }
    centroid /= static_cast<double>(members.size());

    Target t;
    t.id = id;
    t.birth_frame = frame_index;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    t.rng.seed(seq);
    t.reference = color_histogram(frame, members);
    t.estimate.position = homography.pixel_to_ground(centroid);
    t.estimate.velocity = Vec2::Zero();
    t.pixel = homography.ground_to_pixel(t.estimate.position);

    std::normal_distribution<double> pos(0.0, config.birth_position_std);
    std::normal_distribution<double> vel(0.0, config.birth_velocity_std);
    t.particles.resize(config.particles);
    for (auto& p : t.particles) {
        p.position = t.estimate.position + Vec2(pos(t.rng), pos(t.rng));
        p.velocity = Vec2(vel(t.rng), vel(t.rng));
    }
    t.weights.assign(config.particles, 1.0 / static_cast<double>(config.particles));
    return t;
}

bool weight_and_estimate(Target& target, std::span<const double> log_likelihoods, const Homography& homography) {
    const std::size_t n = target.particles.size();
    if (log_likelihoods.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "one likelihood per particle required");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (double v : log_likelihoods) {
        if (!std::isnan(v)) {
            best = std::max(best, v);
        }
    }
    bool ok = std::isfinite(best);
    target.weights.assign(n, 1.0 / static_cast<double>(n));
    if (ok) {
        double total = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double v = log_likelihoods[s];
            target.weights[s] = std::isnan(v) ? 0.0 : std::exp(v - best);
            total += target.weights[s];
        }
        for (auto& w : target.weights) {
            w /= total;
        }
    }
    GroundState est;
    for (std::size_t s = 0; s < n; ++s) {
        est.position += target.weights[s] * target.particles[s].position;
        est.velocity += target.weights[s] * target.particles[s].velocity;
    }
    target.estimate = est;
    target.pixel = project_or_far(homography, est.position);
    return ok;
}

void systematic_resample(Target& target) {
    const std::size_t n = target.particles.size();
    if (n == 0) {
        return;
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0 / static_cast<double>(n));
    const double start = u01(target.rng);
    std::vector<GroundState> out(n);
    double cumulative = target.weights[0];
    std::size_t i = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const double u = start + static_cast<double>(s) / static_cast<double>(n);
        while (u > cumulative && i + 1 < n) {
            ++i;
            cumulative += target.weights[i];
        }
        out[s] = target.particles[i];
    }
    // Prediction expands every S-th particle into S mode children, so the
    // resampled set must not keep a position-dependent order.
    std::shuffle(out.begin(), out.end(), target.rng);
    target.particles = std::move(out);
    target.weights.assign(n, 1.0 / static_cast<double>(n));
}

Tracker::Tracker(TrackerConfig config, Homography homography, std::uint64_t seed)
    : config_(std::move(config)), homography_(std::move(homography)), seed_(seed) {
    config_.validate();
}

bool Tracker::in_red_region(const Vec2& pixel) const {
    return std::any_of(config_.red_regions.begin(), config_.red_regions.end(),
                       [&](const RedRegion& r) { return r.contains(pixel); });
}

FrameResult Tracker::step(const FrameMeasurements& frame) {
    const auto t0 = std::chrono::steady_clock::now();
    FrameResult result;
    result.frame_index = frame.frame_index;
    auto& diag = result.diagnostics;
    diag.measurements = frame.measurements.size();

    auto degrade = [&](const std::string& stage, const std::exception& e) {
        diag.degraded = true;
        if (!diag.degraded_reason.empty()) {
            diag.degraded_reason += "; ";
        }
        diag.degraded_reason += stage + ": " + e.what();
    };

    // Measurement decimation when targets are close.
    std::vector<Vec2> previous_ground;
    for (const auto& t : targets_) {
        previous_ground.push_back(t.estimate.position);
    }
    const double closest = min_pairwise_distance(previous_ground);
    result.clustered_frame = downsample(frame, closest, config_.downsample_stride, config_.downsample_trigger);
    diag.downsampled = result.clustered_frame.measurements.size() != frame.measurements.size();
    diag.measurements_clustered = result.clustered_frame.measurements.size();

    // Social-force prediction of every existing target.
    try {
        std::vector<GroundState> estimates;
        std::vector<ParticleBlock> blocks;
        for (auto& t : targets_) {
            estimates.push_back(t.estimate);
            blocks.push_back(ParticleBlock{std::move(t.particles), &t.rng});
        }
        predict_particles(estimates, blocks, config_.social_force);
        for (std::size_t i = 0; i < targets_.size(); ++i) {
            targets_[i].particles = std::move(blocks[i].particles);
        }
    } catch (const Error& e) {
        degrade("prediction", e);
    }
    std::vector<Vec2> predicted_pixels;
    for (const auto& t : targets_) {
        if (!t.particles.empty()) {
            predicted_pixels.push_back(project_or_far(homography_, particle_mean(t).position));
        }
    }

    // Clustering.
    FrameGeometry geometry{config_.width, config_.height, {}};
    for (const auto& r : config_.red_regions) {
        geometry.boundary_means.push_back(r.mu);
    }
    const bool bootstrap_frame = !bootstrapped_ && targets_.empty();
    try {
        const VbPriors priors = bootstrap_frame ? grid_priors(geometry, config_.clustering)
                                                : init_priors(predicted_pixels, geometry, config_.clustering);
        result.clusters = cluster(result.clustered_frame, priors, config_.clustering);
    } catch (const Error& e) {
        degrade("clustering", e);
        result.clusters = ClusterSet{};
        result.clusters.assignment.assign(result.clustered_frame.measurements.size(), -1);
    }
    diag.vb_iterations = result.clusters.iterations;
    diag.lower_bound = result.clusters.lower_bound;

    // Target count.
    std::vector<int> newborn;
    const std::size_t before = targets_.size();
    if (bootstrap_frame) {
        try {
            bootstrap(result.clustered_frame, result.clusters, result);
        } catch (const Error& e) {
            degrade("bootstrap", e);
        }
        bootstrapped_ = true;
        for (std::size_t i = before; i < targets_.size(); ++i) {
            newborn.push_back(targets_[i].id);
        }
    } else {
        try {
            update_count(frame, result);
        } catch (const Error& e) {
            degrade("lifecycle", e);
        }
        if (result.diagnostics.count_change > 0 && !targets_.empty()) {
            newborn.push_back(targets_.back().id);
        }
    }

    // Association, weighting, estimation, resampling.
    try {
        associate_and_update(result.clustered_frame, result.clusters, newborn, result);
    } catch (const Error& e) {
        degrade("association", e);
    }

    arm_targets(frame);
    for (const auto& t : targets_) {
        result.estimates.push_back({t.id, t.estimate.position, t.pixel});
    }
    std::sort(result.estimates.begin(), result.estimates.end(),
              [](const TargetEstimate& a, const TargetEstimate& b) { return a.id < b.id; });
    result.target_count = result.estimates.size();
    diag.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

void Tracker::bootstrap(const FrameMeasurements& clustered, const ClusterSet& clusters, FrameResult& result) {
    // Clusters closer than the merge distance on the ground form one target.
    std::vector<Vec2> ground;
    for (const auto& c : clusters.clusters) {
        ground.push_back(homography_.pixel_to_ground(c.mean));
    }
    std::vector<int> group(clusters.clusters.size(), -1);
    int groups = 0;
    for (std::size_t a = 0; a < group.size(); ++a) {
        if (group[a] >= 0) {
            continue;
        }
        group[a] = groups;
        std::vector<std::size_t> stack{a};
        while (!stack.empty()) {
            const auto c = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < group.size(); ++b) {
                if (group[b] < 0 && (ground[c] - ground[b]).norm() < config_.bootstrap_merge_distance) {
                    group[b] = groups;
                    stack.push_back(b);
                }
            }
        }
        ++groups;
    }
    for (int g = 0; g < groups; ++g) {
        std::vector<std::size_t> members;
        for (std::size_t c = 0; c < group.size(); ++c) {
            if (group[c] == g) {
                members.insert(members.end(), clusters.clusters[c].members.begin(), clusters.clusters[c].members.end());
            }
        }
        std::sort(members.begin(), members.end());
        Target t = spawn_target(next_id_++, clustered, members, homography_, config_, seed_, clustered.frame_index);
        t.armed = false;
        targets_.push_back(std::move(t));
    }
    result.diagnostics.count_change = groups;
}

void Tracker::arm_targets(const FrameMeasurements& frame) {
    if (std::all_of(targets_.begin(), targets_.end(), [](const Target& t) { return t.armed; })) {
        return;
    }
    const RegionCluster region = red_region_cluster(frame, config_.red_regions);
    const Vec2 centroid = region.empty() ? Vec2::Zero() : homography_.pixel_to_ground(region.centroid);
    for (auto& t : targets_) {
        if (t.armed || in_red_region(t.pixel)) {
            continue;
        }
        t.armed = region.empty() || (t.estimate.position - centroid).norm() > config_.arm_distance;
    }
}

void Tracker::update_count(const FrameMeasurements& frame, FrameResult& result) {
    auto& diag = result.diagnostics;
    if (config_.red_regions.empty()) {
        return;
    }
    const RegionCluster region = red_region_cluster(frame, config_.red_regions);
    if (region.empty()) {
        ghosts_.clear();
        return;
    }
    const Vec2 centroid = homography_.pixel_to_ground(region.centroid);
    // The blob of a removed target may still be walking out through the
    // region, so its ghost follows the region cluster until the region empties.
    for (auto& g : ghosts_) {
        g = centroid;
    }

    std::vector<Vec2> all_targets;
    std::vector<Vec2> armed_targets;
    std::vector<std::size_t> armed_index;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
        all_targets.push_back(targets_[i].estimate.position);
        if (targets_[i].armed) {
            armed_targets.push_back(targets_[i].estimate.position);
            armed_index.push_back(i);
        }
    }
    std::vector<Vec2> birth_blockers = all_targets;
    birth_blockers.insert(birth_blockers.end(), ghosts_.begin(), ghosts_.end());

    diag.p_death = p_death(region.size(), centroid, armed_targets, config_.lifecycle);
    diag.p_birth = p_birth(region.size(), centroid, birth_blockers, config_.lifecycle);
    const auto update = crowdtrack::update_count(static_cast<int>(armed_targets.size()), diag.p_birth, diag.p_death,
                                                 config_.lifecycle);
    diag.count_change = update.change;
    if (update.change < 0) {
        std::size_t victim = armed_index.front();
        double best = std::numeric_limits<double>::infinity();
        for (auto i : armed_index) {
            const double d = (targets_[i].estimate.position - centroid).norm();
            if (d < best) {
                best = d;
                victim = i;
            }
        }
        ghosts_.push_back(targets_[victim].estimate.position);
        targets_.erase(targets_.begin() + static_cast<std::ptrdiff_t>(victim));
    } else if (update.change > 0) {
        Target t = spawn_target(next_id_++, frame, region.members, homography_, config_, seed_, frame.frame_index);
        t.armed = false;
        targets_.push_back(std::move(t));
    }
}

void Tracker::associate_and_update(const FrameMeasurements& clustered, const ClusterSet& clusters,
                                   std::span<const int> newborn, FrameResult& result) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
        if (std::find(newborn.begin(), newborn.end(), targets_[i].id) == newborn.end()) {
            active.push_back(i);
        }
    }
    const std::size_t K = clusters.clusters.size();
    result.association = AssociationMatrix::all_undetected(active.size(), K);
    for (auto i : active) {
        result.association_target_ids.push_back(targets_[i].id);
    }
    if (active.empty()) {
        return;
    }

    std::vector<std::vector<Vec2>> particle_pixels(active.size());
    std::vector<Vec2> predicted_ground;
    for (std::size_t a = 0; a < active.size(); ++a) {
        const auto& t = targets_[active[a]];
        particle_pixels[a].reserve(t.particles.size());
        for (const auto& p : t.particles) {
            particle_pixels[a].push_back(project_or_far(homography_, p.position));
        }
        predicted_ground.push_back(particle_mean(t).position);
    }

    if (!force_undetected_ && K > 0) {
        std::vector<TargetView> views(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) {
            views[a].particle_pixels = particle_pixels[a];
            views[a].reference = &targets_[active[a]].reference;
            views[a].occlusion =
                occlusion_probability(a, predicted_ground, config_.association.occlusion_distance);
        }
        std::vector<ClusterView> cluster_views(K);
        for (std::size_t q = 0; q < K; ++q) {
            cluster_views[q].members = member_points(clustered, clusters.clusters[q].members);
            cluster_views[q].histogram = color_histogram(clustered, clusters.clusters[q].members);
        }
        const Eigen::MatrixXd cost = cost_matrix(cluster_views, views, config_.association);
        const auto hypotheses = murty_kbest(cost, config_.association.k_best);
        result.diagnostics.hypotheses = hypotheses.size();
        result.association = association_probabilities(hypotheses, active.size(), K);
    }

    const Points pixels = to_points(clustered);
    for (std::size_t a = 0; a < active.size(); ++a) {
        auto& t = targets_[active[a]];
        const auto loglik = measurement_log_likelihoods(a, particle_pixels[a], pixels, clusters.assignment,
                                                        result.association,
                                                        config_.association.spatial_covariance);
        if (!weight_and_estimate(t, loglik, homography_)) {
            result.diagnostics.degraded = true;
            if (!result.diagnostics.degraded_reason.empty()) {
                result.diagnostics.degraded_reason += "; ";
            }
            result.diagnostics.degraded_reason += fmt::format("AllZeroWeights for target {}", t.id);
        }
        systematic_resample(t);
    }
}

}  // namespace crowdtrack
