#include "crowdtrack/association.hpp"

#include "crowdtrack/assignment.hpp"
#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace crowdtrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussianLogDensity {
    Mat2 precision;
    double log_norm;

    explicit GaussianLogDensity(const Mat2& cov)
        : precision(cov.inverse()), log_norm(-std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant())) {
        if (!(cov.determinant() > 0.0)) {
            throw Error(ErrorKind::ConfigInvalid, "spatial covariance must be positive definite");
        }
    }

    [[nodiscard]] double operator()(const Vec2& y, const Vec2& mean) const {
        const Vec2 d = y - mean;
        return log_norm - 0.5 * d.dot(precision * d);
    }

    /// Log densities of every column of `ys` (2 x n) around `mean`.
    [[nodiscard]] Eigen::ArrayXd columns(const Eigen::Array2Xd& ys, const Vec2& mean) const {
        const Eigen::ArrayXd dx = ys.row(0).transpose() - mean.x();
        const Eigen::ArrayXd dy = ys.row(1).transpose() - mean.y();
        return log_norm -
               0.5 * (precision(0, 0) * dx.square() + 2.0 * precision(0, 1) * dx * dy + precision(1, 1) * dy.square());
    }
};

/// log(exp(extra) + sum(exp(values))).
double log_sum_exp(const Eigen::ArrayXd& values, double extra) {
    const double best = std::max(values.size() > 0 ? values.maxCoeff() : -kInf, extra);
    if (best == -kInf) {
        return -kInf;
    }
    const double tail = extra == -kInf ? 0.0 : std::exp(extra - best);
    return best + std::log((values - best).exp().sum() + tail);
}

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool nearly_equal(double a, double b) {
    if (a == b) {
        return true;
    }
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

void AssociationParams::validate() const {
    if (k_best < 1 || !(occlusion_distance > 0) || !(feature_variance > 0) || !(clutter_density > 0) ||
        !(spatial_covariance.determinant() > 0)) {
        throw Error(ErrorKind::ConfigInvalid, "association parameters out of range");
    }
}

ColorHistogram color_histogram(std::span<const Measurement> pixels) {
    if (pixels.empty()) {
        throw Error(ErrorKind::EmptyCluster, "histogram of an empty pixel set");
    }
    ColorHistogram h;
    const double w = 1.0 / static_cast<double>(pixels.size());
    for (const auto& m : pixels) {
        h.bins[static_cast<std::size_t>(ColorHistogram::bin_index(m.r, m.g, m.b))] += w;
    }
    return h;
}

ColorHistogram color_histogram(const FrameMeasurements& frame, std::span<const std::size_t> members) {
    if (members.empty()) {
        throw Error(ErrorKind::EmptyCluster, "histogram of an empty cluster");
    }
    ColorHistogram h;
    const double w = 1.0 / static_cast<double>(members.size());
    for (auto j : members) {
        const auto& m = frame.measurements.at(j);
        h.bins[static_cast<std::size_t>(ColorHistogram::bin_index(m.r, m.g, m.b))] += w;
    }
    return h;
}

double bhattacharyya_distance(const ColorHistogram& h1, const ColorHistogram& h2) {
    double rho = 0.0;
    for (std::size_t g = 0; g < h1.bins.size(); ++g) {
        rho += std::sqrt(h1.bins[g] * h2.bins[g]);
    }
    return std::sqrt(std::clamp(1.0 - rho, 0.0, 1.0));
}

double occlusion_probability(std::size_t i, std::span<const Vec2> ground_positions, double delta_c) {
    double d_min = kInf;
    for (std::size_t n = 0; n < ground_positions.size(); ++n) {
        if (n != i) {
            d_min = std::min(d_min, (ground_positions[i] - ground_positions[n]).norm());
        }
    }
    if (d_min == kInf) {
        return 0.0;
    }
    return std::exp(-d_min / delta_c);
}

double cluster_feature_likelihood(const ColorHistogram* reference, const ColorHistogram& cluster_hist, double p_occ,
                                  const AssociationParams& params) {
    if (!(p_occ > params.occlusion_threshold)) {
        return 1.0;
    }
    if (reference == nullptr) {
        throw Error(ErrorKind::MissingReferenceHistogram, "target has no reference histogram");
    }
    const double d = bhattacharyya_distance(*reference, cluster_hist);
    return std::exp(-d / (2.0 * params.feature_variance));
}

double spatial_cluster_log_likelihood(const Points& members, std::span<const Vec2> particle_pixels,
                                      const Mat2& spatial_covariance) {
    if (particle_pixels.empty()) {
        return -kInf;
    }
    const GaussianLogDensity density(spatial_covariance);
    const double log_ns = std::log(static_cast<double>(particle_pixels.size()));
    Eigen::Array2Xd particles(2, static_cast<Eigen::Index>(particle_pixels.size()));
    for (std::size_t s = 0; s < particle_pixels.size(); ++s) {
        particles.col(static_cast<Eigen::Index>(s)) = particle_pixels[s].array();
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < members.cols(); ++j) {
        total += log_sum_exp(density.columns(particles, members.col(j)), -kInf) - log_ns;
    }
    return total;
}

Eigen::MatrixXd cost_matrix(std::span<const ClusterView> clusters, std::span<const TargetView> targets,
                            const AssociationParams& params) {
    const auto K = static_cast<Eigen::Index>(clusters.size());
    const auto N = static_cast<Eigen::Index>(targets.size());
    Eigen::MatrixXd cost(K, N);
    const double log_clutter = std::log(params.clutter_density);
    for (Eigen::Index q = 0; q < K; ++q) {
        const auto& c = clusters[static_cast<std::size_t>(q)];
        const double clutter = static_cast<double>(c.members.cols()) * log_clutter;
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto& t = targets[static_cast<std::size_t>(i)];
            const double feature = cluster_feature_likelihood(t.reference, c.histogram, t.occlusion, params);
            cost(q, i) = std::log(feature) +
                         spatial_cluster_log_likelihood(c.members, t.particle_pixels, params.spatial_covariance) -
                         clutter;
        }
    }
    return cost;
}

namespace {

/// Search node: per-cluster forced choice (or -2 for free) and excluded choices.
/// Choices are target indices 0..N-1 or N for clutter.
struct MurtyNode {
    std::vector<int> forced;
    std::vector<std::vector<int>> excluded;
    std::vector<int> choice;
    double value = 0.0;
};

constexpr int kFree = -2;

double hypothesis_value(const Eigen::MatrixXd& log_cost, const std::vector<int>& choice) {
    double v = 0.0;
    const auto N = static_cast<int>(log_cost.cols());
    for (std::size_t q = 0; q < choice.size(); ++q) {
        if (choice[q] < N) {
            v += log_cost(static_cast<Eigen::Index>(q), choice[q]);
        }
    }
    return v;
}

/// Best assignment under the node's constraints via the padded square problem:
/// cluster rows pick a target or their own clutter column; one slack row per
/// target absorbs undetected targets.
bool solve_node(const Eigen::MatrixXd& log_cost, MurtyNode& node) {
    const auto K = static_cast<int>(log_cost.rows());
    const auto N = static_cast<int>(log_cost.cols());
    const int n = K + N;
    Eigen::MatrixXd ext = Eigen::MatrixXd::Constant(n, n, kInf);
    for (int q = 0; q < K; ++q) {
        for (int i = 0; i < N; ++i) {
            const double c = log_cost(q, i);
            ext(q, i) = std::isnan(c) || c == -kInf ? kInf : -c;
        }
        ext(q, N + q) = 0.0;
        const auto qi = static_cast<std::size_t>(q);
        for (int ex : node.excluded[qi]) {
            ext(q, ex < N ? ex : N + q) = kInf;
        }
        if (node.forced[qi] != kFree) {
            const int keep = node.forced[qi] < N ? node.forced[qi] : N + q;
            const double v = ext(q, keep);
            ext.row(q).setConstant(kInf);
            ext(q, keep) = v;
        }
    }
    for (int t = 0; t < N; ++t) {
        ext(K + t, t) = 0.0;
        for (int q = 0; q < K; ++q) {
            ext(K + t, N + q) = 0.0;
        }
    }
    const auto sol = solve_min_assignment(ext);
    if (!sol) {
        return false;
    }
    node.choice.assign(static_cast<std::size_t>(K), N);
    for (int q = 0; q < K; ++q) {
        const int col = (*sol)[static_cast<std::size_t>(q)];
        node.choice[static_cast<std::size_t>(q)] = col < N ? col : N;
        if (ext(q, col) == kInf) {
            return false;
        }
    }
    node.value = hypothesis_value(log_cost, node.choice);
    return true;
}

}  // namespace

std::vector<Hypothesis> murty_kbest(const Eigen::MatrixXd& log_cost, int k) {
    if (k < 1) {
        throw Error(ErrorKind::ConfigInvalid, "k must be >= 1");
    }
    const auto K = static_cast<int>(log_cost.rows());
    const auto N = static_cast<int>(log_cost.cols());

    auto to_hypothesis = [&](const MurtyNode& node) {
        Hypothesis h;
        h.cluster_to_target.resize(node.choice.size());
        for (std::size_t q = 0; q < node.choice.size(); ++q) {
            h.cluster_to_target[q] = node.choice[q] < N ? node.choice[q] : -1;
        }
        h.log_prob = node.value;
        return h;
    };

    auto worse = [](const MurtyNode& a, const MurtyNode& b) {
        if (!nearly_equal(a.value, b.value)) {
            return a.value < b.value;
        }
        return lex_less(b.choice, a.choice);
    };
    std::priority_queue<MurtyNode, std::vector<MurtyNode>, decltype(worse)> queue(worse);

    MurtyNode root;
    root.forced.assign(static_cast<std::size_t>(K), kFree);
    root.excluded.assign(static_cast<std::size_t>(K), {});
    if (!solve_node(log_cost, root)) {
        return {};
    }
    queue.push(std::move(root));

    std::vector<Hypothesis> out;
    while (!queue.empty()) {
        if (static_cast<int>(out.size()) >= k && !nearly_equal(queue.top().value, out[static_cast<std::size_t>(k) - 1].log_prob)) {
            break;
        }
        MurtyNode node = queue.top();
        queue.pop();
        out.push_back(to_hypothesis(node));

        // Partition the remaining solution space of this node.
        MurtyNode base = node;
        for (int q = 0; q < K; ++q) {
            const auto qi = static_cast<std::size_t>(q);
            const int chosen = node.choice[qi];
            if (node.forced[qi] == kFree) {
                MurtyNode child = base;
                child.excluded[qi].push_back(chosen);
                if (solve_node(log_cost, child)) {
                    queue.push(std::move(child));
                }
            }
            base.forced[qi] = chosen;
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
        if (!nearly_equal(a.log_prob, b.log_prob)) {
            return a.log_prob > b.log_prob;
        }
        return lex_less(a.cluster_to_target, b.cluster_to_target);
    });
    if (static_cast<int>(out.size()) > k) {
        out.resize(static_cast<std::size_t>(k));
    }
    return out;
}

AssociationMatrix::AssociationMatrix(std::size_t targets, std::size_t clusters)
    : undetected_(targets, 0.0),
      values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets), static_cast<Eigen::Index>(clusters))),
      clusters_(clusters) {}

AssociationMatrix AssociationMatrix::all_undetected(std::size_t targets, std::size_t clusters) {
    AssociationMatrix a(targets, clusters);
    std::fill(a.undetected_.begin(), a.undetected_.end(), 1.0);
    return a;
}

AssociationMatrix association_probabilities(std::span<const Hypothesis> hypotheses, std::size_t targets,
                                            std::size_t clusters) {
    if (hypotheses.empty()) {
        throw Error(ErrorKind::DegenerateWeights, "no hypotheses");
    }
    double best = -kInf;
    for (const auto& h : hypotheses) {
        if (h.cluster_to_target.size() != clusters) {
            throw Error(ErrorKind::DimensionMismatch, "hypothesis cluster count mismatch");
        }
        best = std::max(best, h.log_prob);
    }
    if (best == -kInf || std::isnan(best)) {
        throw Error(ErrorKind::DegenerateWeights, "every hypothesis has zero probability");
    }
    std::vector<double> weights(hypotheses.size());
    double total = 0.0;
    for (std::size_t h = 0; h < hypotheses.size(); ++h) {
        weights[h] = std::exp(hypotheses[h].log_prob - best);
        total += weights[h];
    }
    AssociationMatrix a(targets, clusters);
    for (std::size_t h = 0; h < hypotheses.size(); ++h) {
        const double p = weights[h] / total;
        std::vector<char> detected(targets, 0);
        const auto& assign = hypotheses[h].cluster_to_target;
        for (std::size_t q = 0; q < clusters; ++q) {
            const int i = assign[q];
            if (i >= 0) {
                if (static_cast<std::size_t>(i) >= targets) {
                    throw Error(ErrorKind::DimensionMismatch, "hypothesis refers to an unknown target");
                }
                a.assoc_ref(static_cast<std::size_t>(i), q) += p;
                detected[static_cast<std::size_t>(i)] = 1;
            }
        }
        for (std::size_t i = 0; i < targets; ++i) {
            if (!detected[i]) {
                a.undetected_ref(i) += p;
            }
        }
    }
    return a;
}

std::vector<double> measurement_log_likelihoods(std::size_t target, std::span<const Vec2> particle_pixels,
                                                const Points& pixels, std::span<const int> assignment,
                                                const AssociationMatrix& a, const Mat2& spatial_covariance) {
    const GaussianLogDensity density(spatial_covariance);
    const double log_undetected = a.undetected(target) > 0.0 ? std::log(a.undetected(target)) : -kInf;

    // Only pixels of clusters with nonzero association contribute.
    std::vector<Eigen::Index> active;
    std::vector<double> log_assoc;
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
        const int q = assignment[static_cast<std::size_t>(j)];
        if (q < 0) {
            continue;
        }
        const double p = a.assoc(target, static_cast<std::size_t>(q));
        if (p > 0.0) {
            active.push_back(j);
            log_assoc.push_back(std::log(p));
        }
    }
    Eigen::Array2Xd active_pixels(2, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
        active_pixels.col(static_cast<Eigen::Index>(k)) = pixels.col(active[k]).array();
    }
    const Eigen::Map<const Eigen::ArrayXd> assoc_terms(log_assoc.data(), static_cast<Eigen::Index>(log_assoc.size()));
    std::vector<double> out(particle_pixels.size());
    for (std::size_t s = 0; s < particle_pixels.size(); ++s) {
        out[s] = log_sum_exp(assoc_terms + density.columns(active_pixels, particle_pixels[s]), log_undetected);
    }
    return out;
}

}  // namespace crowdtrack
