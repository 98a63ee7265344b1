#include "crowdtrack/error.hpp"
#include "crowdtrack/vbcluster.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace crowdtrack {
namespace {

FrameMeasurements blobs(const std::vector<Vec2>& centres, int per_blob, double sigma, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    FrameMeasurements f;
    for (const auto& c : centres) {
        for (int k = 0; k < per_blob; ++k) {
            f.measurements.push_back({static_cast<int>(std::lround(c.x() + n(rng))),
                                      static_cast<int>(std::lround(c.y() + n(rng))), 0, 0, 0});
        }
    }
    return f;
}

VbPriors small_priors(std::vector<Vec2> means) {
    VbPriors p;
    p.alpha0 = 0.6;
    p.beta0 = 1.0;
    p.nu0 = 3.0;
    p.W0 << 0.02, 0.004, 0.004, 0.01;
    p.means = std::move(means);
    return p;
}

std::vector<oracle::Component> to_oracle(const ClusterPosterior& post) {
    std::vector<oracle::Component> out;
    for (const auto& c : post.components) {
        out.push_back({c.alpha, c.beta, c.nu, c.m, c.W});
    }
    return out;
}

TEST(BodyShape, RotationOfDiagonal) {
    const Mat2 w = body_shape_scale(500.0, 300.0, std::numbers::pi / 2.0);
    EXPECT_NEAR(w(0, 0), 300.0, 1e-9);
    EXPECT_NEAR(w(1, 1), 500.0, 1e-9);
    EXPECT_NEAR(w(0, 1), 0.0, 1e-9);
    const Mat2 id = body_shape_scale(2.0, 2.0, 0.7);
    EXPECT_TRUE(id.isApprox(2.0 * Mat2::Identity()));
}

TEST(Priors, TargetNeighbourBoundaryOrder) {
    ClusteringConfig cfg;
    cfg.neighbors_per_target = 2;
    FrameGeometry geo{640, 480, {Vec2(5, 240)}};
    const std::vector<Vec2> targets{Vec2(100, 100), Vec2(630, 200)};
    const auto p = init_priors(targets, geo, cfg);
    ASSERT_EQ(p.means.size(), 2u + 4u + 1u);
    EXPECT_EQ(p.means[0], targets[0]);
    EXPECT_EQ(p.means[1], targets[1]);
    EXPECT_TRUE(p.means[2].isApprox(Vec2(180, 100)));
    // (710, 200) leaves the frame, so the hypothesis is mirrored.
    EXPECT_TRUE(p.means[4].isApprox(Vec2(550, 200)));
    EXPECT_EQ(p.means.back(), Vec2(5, 240));
}

TEST(Priors, GridCoversFrame) {
    ClusteringConfig cfg;
    const auto p = grid_priors(FrameGeometry{640, 480, {}}, cfg);
    EXPECT_EQ(p.means.size(), 8u * 6u);
    EXPECT_EQ(p.means.front(), Vec2(40, 40));
}

TEST(EStep, RowsSumToOne) {
    const auto f = blobs({Vec2(100, 100), Vec2(200, 120)}, 50, 8.0, 3);
    const Points y = to_points(f);
    const auto pri = small_priors({Vec2(90, 90), Vec2(210, 130), Vec2(300, 300)});
    const auto r = e_step(y, prior_posterior(pri));
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
        EXPECT_NEAR(r.row(j).sum(), 1.0, 1e-12);
        EXPECT_GE(r.row(j).minCoeff(), 0.0);
    }
}

TEST(MStep, MatchesClosedFormForHardAssignment) {
    Points y(2, 3);
    y << 0, 2, 4, 0, 0, 3;
    Responsibilities r = Responsibilities::Ones(3, 1);
    auto pri = small_priors({Vec2(1, 1)});
    const auto post = m_step(y, r, pri);
    const auto& c = post.components[0];
    EXPECT_DOUBLE_EQ(c.N, 3.0);
    EXPECT_DOUBLE_EQ(c.alpha, 3.6);
    EXPECT_DOUBLE_EQ(c.beta, 4.0);
    EXPECT_DOUBLE_EQ(c.nu, 6.0);
    EXPECT_TRUE(c.ybar.isApprox(Vec2(2, 1)));
    // m = (beta0 m0 + N ybar) / beta
    EXPECT_TRUE(c.m.isApprox(Vec2(7.0 / 4.0, 1.0)));
}

TEST(LowerBound, AgreesWithPointwiseOracle) {
    const auto f = blobs({Vec2(50, 60), Vec2(120, 70), Vec2(80, 140)}, 40, 6.0, 11);
    const Points y = to_points(f);
    const auto pri = small_priors({Vec2(45, 55), Vec2(125, 75), Vec2(85, 130), Vec2(200, 200)});
    auto r = e_step(y, prior_posterior(pri));
    for (int it = 0; it < 5; ++it) {
        const auto post = m_step(y, r, pri);
        const double got = lower_bound(y, r, post, pri);
        const double want = oracle::vb_lower_bound(y, r, to_oracle(post), pri.alpha0, pri.beta0, pri.nu0, pri.W0,
                                                   pri.means);
        EXPECT_NEAR(got, want, 1e-7 * std::abs(want)) << "iteration " << it;
        r = e_step(y, post);
    }
}

TEST(Cluster, ObserverSeesNonDecreasingBound) {
    const auto f = blobs({Vec2(100, 100), Vec2(180, 100)}, 200, 8.0, 5);
    ClusteringConfig cfg;
    cfg.min_cluster_size = 1;
    auto pri = small_priors({Vec2(90, 100), Vec2(190, 100), Vec2(140, 160)});
    double previous = -std::numeric_limits<double>::infinity();
    int calls = 0;
    const auto result = cluster(f, pri, cfg, [&](int, const Responsibilities& r, double bound) {
        ++calls;
        EXPECT_GE(bound, previous - 1e-8);
        previous = bound;
        EXPECT_NEAR(r.rowwise().sum().maxCoeff(), 1.0, 1e-9);
    });
    EXPECT_EQ(calls, result.iterations);
    EXPECT_TRUE(result.converged);
    EXPECT_EQ(result.clusters.size(), 2u);
}

TEST(Cluster, SmallClustersArePruned) {
    auto f = blobs({Vec2(100, 100)}, 300, 8.0, 1);
    const auto small = blobs({Vec2(400, 300)}, 99, 5.0, 2);
    f.measurements.insert(f.measurements.end(), small.measurements.begin(), small.measurements.end());
    ClusteringConfig cfg;
    const auto result = cluster(f, small_priors({Vec2(100, 100), Vec2(400, 300)}), cfg);
    ASSERT_EQ(result.clusters.size(), 1u);
    EXPECT_EQ(result.clusters[0].pixel_count(), 300u);
    for (std::size_t j = 300; j < f.measurements.size(); ++j) {
        EXPECT_EQ(result.assignment[j], -1);
    }
}

TEST(Cluster, DecimatedMembersCountForTheirStride) {
    auto f = blobs({Vec2(100, 100)}, 20, 4.0, 4);
    f.stride = 9;  // 20 kept measurements stand for 180 pixels
    ClusteringConfig cfg;
    EXPECT_EQ(cluster(f, small_priors({Vec2(100, 100)}), cfg).clusters.size(), 1u);
    f.stride = 1;
    EXPECT_TRUE(cluster(f, small_priors({Vec2(100, 100)}), cfg).clusters.empty());
}

TEST(Cluster, EmptyInputGivesNoClusters) {
    const auto result = cluster(FrameMeasurements{}, small_priors({Vec2(0, 0)}), ClusteringConfig{});
    EXPECT_TRUE(result.clusters.empty());
    EXPECT_TRUE(result.converged);
}

TEST(Priors, InvalidHyperparametersRejected) {
    auto p = small_priors({Vec2(0, 0)});
    p.nu0 = 0.5;
    EXPECT_THROW(p.validate(), Error);
    p = small_priors({Vec2(0, 0)});
    p.W0 << 1, 0, 0, -1;
    EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace crowdtrack
