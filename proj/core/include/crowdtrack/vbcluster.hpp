#pragma once

#include "crowdtrack/coords.hpp"
#include "crowdtrack/foreground.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace crowdtrack {

/// 2 x M matrix of pixel coordinates, one column per measurement.
using Points = Eigen::Matrix2Xd;

[[nodiscard]] Points to_points(const FrameMeasurements& frame);

/// Dirichlet / Gaussian-Wishart priors for the variational mixture.
/// One prior mean per mixture component; the component count is means.size().
struct VbPriors {
    double alpha0 = 0.6;
    double beta0 = 1.0;
    double nu0 = 3.0;
    Mat2 W0 = Mat2::Identity();
    std::vector<Vec2> means;

    void validate() const;
};

/// Wishart scale describing the expected body ellipse: U^T diag(l1, l2) U,
/// U the rotation by `angle`.
[[nodiscard]] Mat2 body_shape_scale(double l1, double l2, double angle);

struct ClusteringConfig {
    double alpha0 = 0.6;
    double beta0 = 1.0;
    double nu0 = 3.0;
    double l1 = 500.0;
    double l2 = 300.0;
    double shape_angle = 1.5707963267948966;
    int neighbors_per_target = 1;
    double neighbor_radius = 80.0;      ///< px offset of each neighbourhood hypothesis
    double tolerance = 1e-6;            ///< absolute change of the lower bound, met on two consecutive iterations
    int max_iterations = 500;
    std::size_t min_cluster_size = 100;  ///< in original pixels; decimated members count `stride` each
    double bootstrap_grid = 80.0;       ///< px spacing of prior means when no targets exist yet
};

/// Image extent plus the fixed entry/exit prior means.
struct FrameGeometry {
    int width = 640;
    int height = 480;
    std::vector<Vec2> boundary_means;
};

/// Prior means: every target's pixel location, its neighbourhood hypotheses,
/// then the boundary means.
[[nodiscard]] VbPriors init_priors(std::span<const Vec2> target_pixels, const FrameGeometry& geometry,
                                   const ClusteringConfig& config);

/// Prior means on a regular grid covering the frame (first-frame initialisation).
[[nodiscard]] VbPriors grid_priors(const FrameGeometry& geometry, const ClusteringConfig& config);

struct MixtureComponent {
    double alpha = 0.0;
    double beta = 0.0;
    double nu = 0.0;
    Vec2 m = Vec2::Zero();
    Mat2 W = Mat2::Identity();
    double N = 0.0;
    Vec2 ybar = Vec2::Zero();
    Mat2 S = Mat2::Zero();
};

struct ClusterPosterior {
    std::vector<MixtureComponent> components;
};

/// M x K responsibilities; rows sum to one.
using Responsibilities = Eigen::MatrixXd;

/// Posterior equal to the priors, as used for the initial responsibility pass.
[[nodiscard]] ClusterPosterior prior_posterior(const VbPriors& priors);

[[nodiscard]] Responsibilities e_step(const Points& data, const ClusterPosterior& post);
[[nodiscard]] ClusterPosterior m_step(const Points& data, const Responsibilities& r, const VbPriors& priors);
[[nodiscard]] double lower_bound(const Points& data, const Responsibilities& r, const ClusterPosterior& post,
                                 const VbPriors& priors);

struct Cluster {
    int id = 0;
    Vec2 mean = Vec2::Zero();
    Mat2 covariance = Mat2::Zero();
    std::vector<std::size_t> members;  ///< indices into the clustered frame

    [[nodiscard]] std::size_t pixel_count() const noexcept { return members.size(); }
};

struct ClusterSet {
    std::vector<Cluster> clusters;
    /// Per measurement: index into `clusters`, or -1 when its component was pruned.
    std::vector<int> assignment;
    int iterations = 0;
    double lower_bound = 0.0;
    bool converged = false;
};

/// Called after each iteration with the responsibilities used by that M-step
/// and the resulting lower bound.
using IterationObserver = std::function<void(int iteration, const Responsibilities&, double bound)>;

[[nodiscard]] ClusterSet cluster(const FrameMeasurements& data, const VbPriors& priors,
                                 const ClusteringConfig& config, const IterationObserver& observer = {});

class CsvWriter;

/// Appends `frame,cluster_id,x,y` rows for every assigned measurement.
void append_cluster_dump(CsvWriter& out, const FrameMeasurements& data, const ClusterSet& clusters);
inline constexpr const char* kClusterDumpHeader = "frame,cluster_id,x,y";

}  // namespace crowdtrack
