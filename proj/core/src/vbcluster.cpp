#include "crowdtrack/vbcluster.hpp"

#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace crowdtrack {

namespace {

constexpr double kDim = 2.0;
constexpr double kScaleRegularizer = 1e-9;
constexpr double kEmptyComponent = 1e-12;

double digamma(double x) { return boost::math::digamma(x); }

/// E[ln |Lambda|] under a Wishart(W, nu) in two dimensions.
double expected_log_det_precision(const MixtureComponent& c) {
    return digamma(0.5 * c.nu) + digamma(0.5 * (c.nu - 1.0)) + kDim * std::log(2.0) +
           std::log(c.W.determinant());
}

/// ln B(W, nu), the Wishart normaliser.
double log_wishart_norm(const Mat2& W, double nu) {
    return -0.5 * nu * std::log(W.determinant()) - 0.5 * nu * kDim * std::log(2.0) -
           0.25 * kDim * (kDim - 1.0) * std::log(std::numbers::pi) - std::lgamma(0.5 * nu) -
           std::lgamma(0.5 * (nu - 1.0));
}

double wishart_entropy(const MixtureComponent& c, double e_log_det) {
    return -log_wishart_norm(c.W, c.nu) - 0.5 * (c.nu - kDim - 1.0) * e_log_det + 0.5 * c.nu * kDim;
}

double log_dirichlet_norm(std::span<const double> alphas) {
    double sum = 0.0;
    double lg = 0.0;
    for (double a : alphas) {
        sum += a;
        lg += std::lgamma(a);
    }
    return std::lgamma(sum) - lg;
}

bool is_spd(const Mat2& m) {
    return m.allFinite() && m(0, 0) > 0.0 && m.determinant() > 0.0 && std::abs(m(0, 1) - m(1, 0)) <=
                                                                           1e-9 * (std::abs(m(0, 0)) + std::abs(m(1, 1)));
}

}  // namespace

Points to_points(const FrameMeasurements& frame) {
    Points pts(2, static_cast<Eigen::Index>(frame.measurements.size()));
    for (std::size_t j = 0; j < frame.measurements.size(); ++j) {
        pts(0, static_cast<Eigen::Index>(j)) = frame.measurements[j].x;
        pts(1, static_cast<Eigen::Index>(j)) = frame.measurements[j].y;
    }
    return pts;
}

void VbPriors::validate() const {
    if (!(alpha0 > 0.0) || !(beta0 > 0.0) || !(nu0 > kDim - 1.0)) {
        throw Error(ErrorKind::ConfigInvalid, "VB priors need alpha0 > 0, beta0 > 0, nu0 > 1");
    }
    if (!is_spd(W0)) {
        throw Error(ErrorKind::ConfigInvalid, "VB prior scale W0 must be symmetric positive definite");
    }
}

Mat2 body_shape_scale(double l1, double l2, double angle) {
    Mat2 u;
    u << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const Mat2 scaled = u.transpose() * Vec2(l1, l2).asDiagonal() * u;
    return 0.5 * (scaled + scaled.transpose());
}

namespace {

VbPriors base_priors(const ClusteringConfig& config) {
    VbPriors p;
    p.alpha0 = config.alpha0;
    p.beta0 = config.beta0;
    p.nu0 = config.nu0;
    p.W0 = body_shape_scale(config.l1, config.l2, config.shape_angle);
    return p;
}

}  // namespace

VbPriors init_priors(std::span<const Vec2> target_pixels, const FrameGeometry& geometry,
                     const ClusteringConfig& config) {
    VbPriors p = base_priors(config);
    for (const auto& t : target_pixels) {
        p.means.push_back(t);
    }
    for (const auto& t : target_pixels) {
        for (int n = 0; n < config.neighbors_per_target; ++n) {
            const double angle = 2.0 * std::numbers::pi * n / std::max(1, config.neighbors_per_target);
            Vec2 offset(std::cos(angle), std::sin(angle));
            Vec2 candidate = t + config.neighbor_radius * offset;
            if (candidate.x() < 0.0 || candidate.x() >= geometry.width || candidate.y() < 0.0 ||
                candidate.y() >= geometry.height) {
                candidate = t - config.neighbor_radius * offset;
            }
            p.means.push_back(candidate);
        }
    }
    for (const auto& b : geometry.boundary_means) {
        p.means.push_back(b);
    }
    return p;
}

VbPriors grid_priors(const FrameGeometry& geometry, const ClusteringConfig& config) {
    VbPriors p = base_priors(config);
    const double step = config.bootstrap_grid;
    for (double y = 0.5 * step; y < geometry.height; y += step) {
        for (double x = 0.5 * step; x < geometry.width; x += step) {
            p.means.emplace_back(x, y);
        }
    }
    return p;
}

ClusterPosterior prior_posterior(const VbPriors& priors) {
    ClusterPosterior post;
    post.components.reserve(priors.means.size());
    for (const auto& m0 : priors.means) {
        MixtureComponent c;
        c.alpha = priors.alpha0;
        c.beta = priors.beta0;
        c.nu = priors.nu0;
        c.m = m0;
        c.W = priors.W0;
        c.ybar = m0;
        post.components.push_back(c);
    }
    return post;
}

Responsibilities e_step(const Points& data, const ClusterPosterior& post) {
    const auto M = data.cols();
    const auto K = static_cast<Eigen::Index>(post.components.size());
    if (K == 0) {
        throw Error(ErrorKind::ConfigInvalid, "e_step needs at least one component");
    }
    double alpha_sum = 0.0;
    for (const auto& c : post.components) {
        alpha_sum += c.alpha;
    }
    const double psi_sum = digamma(alpha_sum);
    Eigen::VectorXd constant(K);
    for (Eigen::Index q = 0; q < K; ++q) {
        const auto& c = post.components[static_cast<std::size_t>(q)];
        if (!is_spd(c.W)) {
            throw Error(ErrorKind::SingularScale, fmt::format("component {} scale is not SPD", q));
        }
        const double e_log_pi = digamma(c.alpha) - psi_sum;
        constant(q) = e_log_pi + 0.5 * expected_log_det_precision(c) - 0.5 * kDim * std::log(2.0 * std::numbers::pi) -
                      0.5 * kDim / c.beta;
    }

    Responsibilities r(M, K);
    Eigen::VectorXd log_rho(K);
    for (Eigen::Index j = 0; j < M; ++j) {
        const Vec2 y = data.col(j);
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index q = 0; q < K; ++q) {
            const auto& c = post.components[static_cast<std::size_t>(q)];
            const Vec2 d = y - c.m;
            log_rho(q) = constant(q) - 0.5 * c.nu * d.dot(c.W * d);
            best = std::max(best, log_rho(q));
        }
        if (!std::isfinite(best)) {
            throw Error(ErrorKind::NumericalUnderflow, fmt::format("measurement {} has no finite responsibility", j));
        }
        double total = 0.0;
        for (Eigen::Index q = 0; q < K; ++q) {
            const double v = std::exp(log_rho(q) - best);
            r(j, q) = v;
            total += v;
        }
        r.row(j) /= total;
    }
    return r;
}

ClusterPosterior m_step(const Points& data, const Responsibilities& r, const VbPriors& priors) {
    const auto M = data.cols();
    const auto K = r.cols();
    if (r.rows() != M || static_cast<std::size_t>(K) != priors.means.size()) {
        throw Error(ErrorKind::DimensionMismatch, "responsibilities do not match data/priors");
    }
    const Mat2 W0_inv = priors.W0.inverse();
    ClusterPosterior post;
    post.components.resize(static_cast<std::size_t>(K));
    for (Eigen::Index q = 0; q < K; ++q) {
        auto& c = post.components[static_cast<std::size_t>(q)];
        const Vec2& m0 = priors.means[static_cast<std::size_t>(q)];
        double n = 0.0;
        Vec2 sum = Vec2::Zero();
        for (Eigen::Index j = 0; j < M; ++j) {
            n += r(j, q);
            sum += r(j, q) * data.col(j);
        }
        c.N = n;
        if (n > kEmptyComponent) {
            c.ybar = sum / n;
            Mat2 scatter = Mat2::Zero();
            for (Eigen::Index j = 0; j < M; ++j) {
                const Vec2 d = data.col(j) - c.ybar;
                scatter += r(j, q) * d * d.transpose();
            }
            c.S = scatter / n;
        } else {
            c.ybar = m0;
            c.S = Mat2::Zero();
        }
        c.alpha = priors.alpha0 + n;
        c.beta = priors.beta0 + n;
        c.nu = priors.nu0 + n;
        c.m = (priors.beta0 * m0 + n * c.ybar) / c.beta;
        const Vec2 dm = c.ybar - m0;
        Mat2 w_inv = W0_inv + n * c.S + (priors.beta0 * n / (priors.beta0 + n)) * dm * dm.transpose();
        w_inv = 0.5 * (w_inv + w_inv.transpose()) + kScaleRegularizer * Mat2::Identity();
        if (!(w_inv.determinant() > 0.0) || !w_inv.allFinite()) {
            throw Error(ErrorKind::SingularScale, fmt::format("component {} scale matrix is singular", q));
        }
        c.W = w_inv.inverse();
        c.W = 0.5 * (c.W + c.W.transpose());
    }
    return post;
}

double lower_bound(const Points& data, const Responsibilities& r, const ClusterPosterior& post,
                   const VbPriors& priors) {
    const auto K = static_cast<Eigen::Index>(post.components.size());
    const auto M = data.cols();
    if (r.rows() != M || r.cols() != K || priors.means.size() != static_cast<std::size_t>(K)) {
        throw Error(ErrorKind::DimensionMismatch, "lower_bound inputs disagree in size");
    }
    const double log2pi = std::log(2.0 * std::numbers::pi);
    const Mat2 W0_inv = priors.W0.inverse();

    double alpha_sum = 0.0;
    for (const auto& c : post.components) {
        alpha_sum += c.alpha;
    }
    const double psi_sum = digamma(alpha_sum);

    std::vector<double> e_log_pi(static_cast<std::size_t>(K));
    std::vector<double> e_log_det(static_cast<std::size_t>(K));
    std::vector<double> alphas(static_cast<std::size_t>(K));
    for (Eigen::Index q = 0; q < K; ++q) {
        const auto& c = post.components[static_cast<std::size_t>(q)];
        e_log_pi[static_cast<std::size_t>(q)] = digamma(c.alpha) - psi_sum;
        e_log_det[static_cast<std::size_t>(q)] = expected_log_det_precision(c);
        alphas[static_cast<std::size_t>(q)] = c.alpha;
    }

    double e_log_px = 0.0;   // E[ln p(Y | B, mu, Lambda)]
    double e_log_pz = 0.0;   // E[ln p(B | C)]
    double e_log_qz = 0.0;   // E[ln q(B)]
    double e_log_pmu = 0.0;  // E[ln p(mu, Lambda)]
    double e_log_qmu = 0.0;  // E[ln q(mu, Lambda)]
    double sum_e_log_pi = 0.0;
    double sum_alpha_term = 0.0;
    for (Eigen::Index q = 0; q < K; ++q) {
        const auto qi = static_cast<std::size_t>(q);
        const auto& c = post.components[qi];
        const Vec2& m0 = priors.means[qi];
        const double eld = e_log_det[qi];
        const Vec2 dy = c.ybar - c.m;
        e_log_px += 0.5 * c.N *
                    (eld - kDim / c.beta - c.nu * (c.S * c.W).trace() - c.nu * dy.dot(c.W * dy) - kDim * log2pi);

        const Vec2 dm = c.m - m0;
        e_log_pmu += 0.5 * (kDim * std::log(priors.beta0 / (2.0 * std::numbers::pi)) + eld -
                            kDim * priors.beta0 / c.beta - priors.beta0 * c.nu * dm.dot(c.W * dm)) +
                     log_wishart_norm(priors.W0, priors.nu0) + 0.5 * (priors.nu0 - kDim - 1.0) * eld -
                     0.5 * c.nu * (W0_inv * c.W).trace();

        e_log_qmu += 0.5 * eld + 0.5 * kDim * std::log(c.beta / (2.0 * std::numbers::pi)) - 0.5 * kDim -
                     wishart_entropy(c, eld);

        sum_e_log_pi += e_log_pi[qi];
        sum_alpha_term += (c.alpha - 1.0) * e_log_pi[qi];
        for (Eigen::Index j = 0; j < M; ++j) {
            const double rj = r(j, q);
            if (rj > 0.0) {
                e_log_pz += rj * e_log_pi[qi];
                e_log_qz += rj * std::log(rj);
            }
        }
    }
    const std::vector<double> alpha0s(static_cast<std::size_t>(K), priors.alpha0);
    const double e_log_ppi = log_dirichlet_norm(alpha0s) + (priors.alpha0 - 1.0) * sum_e_log_pi;
    const double e_log_qpi = sum_alpha_term + log_dirichlet_norm(alphas);

    return e_log_px + e_log_pz + e_log_ppi + e_log_pmu - e_log_qz - e_log_qpi - e_log_qmu;
}

ClusterSet cluster(const FrameMeasurements& data, const VbPriors& priors, const ClusteringConfig& config,
                   const IterationObserver& observer) {
    ClusterSet result;
    result.assignment.assign(data.measurements.size(), -1);
    if (data.measurements.empty() || priors.means.empty()) {
        result.converged = true;
        return result;
    }
    priors.validate();
    const Points pts = to_points(data);

    Responsibilities r = e_step(pts, prior_posterior(priors));
    ClusterPosterior post;
    double previous = -std::numeric_limits<double>::infinity();
    int small_changes = 0;  // consecutive iterations with |dL| below tolerance
    for (int it = 1; it <= config.max_iterations; ++it) {
        post = m_step(pts, r, priors);
        const double bound = lower_bound(pts, r, post, priors);
        result.iterations = it;
        result.lower_bound = bound;
        if (observer) {
            observer(it, r, bound);
        }
        small_changes = it > 1 && std::abs(bound - previous) < config.tolerance ? small_changes + 1 : 0;
        if (small_changes == 2) {
            result.converged = true;
            break;
        }
        previous = bound;
        r = e_step(pts, post);
    }
    r = e_step(pts, post);

    const auto K = r.cols();
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(K));
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
        Eigen::Index best = 0;
        r.row(j).maxCoeff(&best);
        members[static_cast<std::size_t>(best)].push_back(static_cast<std::size_t>(j));
    }
    for (Eigen::Index q = 0; q < K; ++q) {
        auto& m = members[static_cast<std::size_t>(q)];
        // Each decimated measurement stands for `stride` foreground pixels.
        if (m.size() * static_cast<std::size_t>(std::max(data.stride, 1)) < config.min_cluster_size) {
            continue;
        }
        Cluster c;
        c.id = static_cast<int>(result.clusters.size());
        Vec2 sum = Vec2::Zero();
        for (auto j : m) {
            sum += pts.col(static_cast<Eigen::Index>(j));
        }
        c.mean = sum / static_cast<double>(m.size());
        c.covariance = post.components[static_cast<std::size_t>(q)].S;
        for (auto j : m) {
            result.assignment[j] = c.id;
        }
        c.members = std::move(m);
        result.clusters.push_back(std::move(c));
    }
    return result;
}

void append_cluster_dump(CsvWriter& out, const FrameMeasurements& data, const ClusterSet& clusters) {
    for (std::size_t j = 0; j < data.measurements.size() && j < clusters.assignment.size(); ++j) {
        if (clusters.assignment[j] < 0) {
            continue;
        }
        const auto& m = data.measurements[j];
        out.row(fmt::format("{},{},{},{}", data.frame_index, clusters.assignment[j], m.x, m.y));
    }
}

}  // namespace crowdtrack
