#pragma once

#include "crowdtrack/coords.hpp"
#include "crowdtrack/foreground.hpp"
#include "crowdtrack/vbcluster.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace crowdtrack {

inline constexpr int kHistogramBinsPerChannel = 16;
inline constexpr int kHistogramBins = kHistogramBinsPerChannel * kHistogramBinsPerChannel * kHistogramBinsPerChannel;

/// L1-normalised 16x16x16 RGB histogram.
struct ColorHistogram {
    std::vector<double> bins = std::vector<double>(kHistogramBins, 0.0);

    [[nodiscard]] static constexpr int bin_index(int r, int g, int b) noexcept {
        return (r / 16) * kHistogramBinsPerChannel * kHistogramBinsPerChannel + (g / 16) * kHistogramBinsPerChannel +
               b / 16;
    }
};

/// Histogram of the given members of `frame`. Throws EmptyCluster.
[[nodiscard]] ColorHistogram color_histogram(const FrameMeasurements& frame, std::span<const std::size_t> members);
[[nodiscard]] ColorHistogram color_histogram(std::span<const Measurement> pixels);

/// sqrt(1 - sum_g sqrt(h1_g h2_g)), clamped to [0, 1].
[[nodiscard]] double bhattacharyya_distance(const ColorHistogram& h1, const ColorHistogram& h2);

struct AssociationParams {
    int k_best = 10;
    double occlusion_threshold = 0.4;  ///< theta
    double occlusion_distance = 1.0;   ///< Delta_c, metres
    double feature_variance = 0.1;     ///< sigma^2
    Mat2 spatial_covariance = Vec2(400.0, 400.0).asDiagonal();  ///< Sigma_s, px^2
    double clutter_density = 1.0;      ///< gamma, per clutter pixel

    void validate() const;
};

/// exp(-d_min / Delta_c) over ground distances to the other targets; 0 when
/// target `i` has no other target to be occluded by.
[[nodiscard]] double occlusion_probability(std::size_t i, std::span<const Vec2> ground_positions, double delta_c);

/// exp(-d / (2 sigma^2)) when p_occ > theta, exactly 1 otherwise.
[[nodiscard]] double cluster_feature_likelihood(const ColorHistogram* reference, const ColorHistogram& cluster_hist,
                                                double p_occ, const AssociationParams& params);

/// log prod_j (1/Ns) sum_s N(y_j | mu_s, Sigma_s) for the member pixels.
[[nodiscard]] double spatial_cluster_log_likelihood(const Points& members, std::span<const Vec2> particle_pixels,
                                                    const Mat2& spatial_covariance);

/// Per-target inputs to association: particle means in pixels plus appearance.
struct TargetView {
    std::vector<Vec2> particle_pixels;
    const ColorHistogram* reference = nullptr;
    double occlusion = 0.0;
};

/// Per-cluster inputs: member pixel coordinates and colour histogram.
struct ClusterView {
    Points members;
    ColorHistogram histogram;
};

/// K x N matrix of log association scores: log(feature factor * spatial
/// product) minus the clutter log-density of the cluster's pixels.
[[nodiscard]] Eigen::MatrixXd cost_matrix(std::span<const ClusterView> clusters, std::span<const TargetView> targets,
                                          const AssociationParams& params);

/// One joint assignment. cluster_to_target[q] is the target index or -1 (clutter).
struct Hypothesis {
    std::vector<int> cluster_to_target;
    double log_prob = 0.0;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

/// The k best one-to-one assignments maximising the summed log scores, where
/// clutter clusters and undetected targets contribute zero. Sorted by
/// descending log_prob, ties by lexicographic cluster_to_target.
[[nodiscard]] std::vector<Hypothesis> murty_kbest(const Eigen::MatrixXd& log_cost, int k);

/// Per target: probability of staying undetected and of owning each cluster.
class AssociationMatrix {
public:
    AssociationMatrix() = default;
    AssociationMatrix(std::size_t targets, std::size_t clusters);

    [[nodiscard]] std::size_t targets() const noexcept { return undetected_.size(); }
    [[nodiscard]] std::size_t clusters() const noexcept { return clusters_; }
    [[nodiscard]] double undetected(std::size_t i) const { return undetected_.at(i); }
    [[nodiscard]] double assoc(std::size_t i, std::size_t q) const { return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)); }

    double& undetected_ref(std::size_t i) { return undetected_.at(i); }
    double& assoc_ref(std::size_t i, std::size_t q) { return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)); }

    /// All targets undetected.
    [[nodiscard]] static AssociationMatrix all_undetected(std::size_t targets, std::size_t clusters);

private:
    std::vector<double> undetected_;
    Eigen::MatrixXd values_;
    std::size_t clusters_ = 0;
};

/// Posterior over the hypothesis set, marginalised per (target, cluster).
/// Throws DegenerateWeights when every hypothesis has -inf log probability.
[[nodiscard]] AssociationMatrix association_probabilities(std::span<const Hypothesis> hypotheses,
                                                          std::size_t targets, std::size_t clusters);

/// log of A_io + sum_j A_i,q(j) N(y_j | particle, Sigma_s), evaluated for
/// every particle of target i. `assignment[j]` is the cluster of pixel j or -1.
[[nodiscard]] std::vector<double> measurement_log_likelihoods(std::size_t target, std::span<const Vec2> particle_pixels,
                                                              const Points& pixels, std::span<const int> assignment,
                                                              const AssociationMatrix& a, const Mat2& spatial_covariance);

}  // namespace crowdtrack
