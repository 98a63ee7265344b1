#include "crowdtrack/metrics.hpp"

#include "crowdtrack/assignment.hpp"
#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace crowdtrack {

namespace {

constexpr double kCentimetresPerMetre = 100.0;

const TrackPoint* find_id(std::span<const TrackPoint> points, int id) {
    for (const auto& p : points) {
        if (p.id == id) {
            return &p;
        }
    }
    return nullptr;
}

std::span<const TrackPoint> frame_points(const TrackSet& set, long frame) {
    const auto it = set.find(frame);
    if (it == set.end()) {
        return {};
    }
    return it->second;
}

}  // namespace

TrackSet group_by_frame(std::span<const TrackPoint> points) {
    TrackSet out;
    for (const auto& p : points) {
        out[p.frame].push_back(p);
    }
    for (auto& [frame, pts] : out) {
        std::sort(pts.begin(), pts.end(), [](const TrackPoint& a, const TrackPoint& b) { return a.id < b.id; });
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].id == pts[i - 1].id) {
                throw Error(ErrorKind::MalformedInput,
                            fmt::format("id {} appears twice in frame {}", pts[i].id, frame));
            }
        }
    }
    return out;
}

void OspamtParams::validate() const {
    if (!(cutoff > 0) || !(delta > 0) || !(order >= 1)) {
        throw Error(ErrorKind::ConfigInvalid, "OSPAMT needs c > 0, delta > 0 and p >= 1");
    }
}

void MetricsConfig::validate() const {
    if (!(match_threshold > 0)) {
        throw Error(ErrorKind::ConfigInvalid, "match threshold must be positive");
    }
    ospamt.validate();
}

FrameMatch match_frame(std::span<const TrackPoint> gt, std::span<const TrackPoint> est, double threshold,
                       Correspondence& carry) {
    FrameMatch out;
    out.ground_truth = static_cast<int>(gt.size());
    std::vector<bool> gt_used(gt.size(), false);
    std::vector<bool> est_used(est.size(), false);

    auto record = [&](std::size_t g, std::size_t e, double d) {
        gt_used[g] = true;
        est_used[e] = true;
        out.matches.emplace_back(gt[g].id, est[e].id);
        out.distances.push_back(d);
    };

    // Keep last frame's correspondences that are still valid.
    for (std::size_t g = 0; g < gt.size(); ++g) {
        const auto it = carry.find(gt[g].id);
        if (it == carry.end()) {
            continue;
        }
        for (std::size_t e = 0; e < est.size(); ++e) {
            if (!est_used[e] && est[e].id == it->second) {
                const double d = (gt[g].ground - est[e].ground).norm();
                if (d <= threshold) {
                    record(g, e, d);
                }
                break;
            }
        }
    }

    std::vector<std::size_t> free_gt;
    std::vector<std::size_t> free_est;
    for (std::size_t g = 0; g < gt.size(); ++g) {
        if (!gt_used[g]) {
            free_gt.push_back(g);
        }
    }
    for (std::size_t e = 0; e < est.size(); ++e) {
        if (!est_used[e]) {
            free_est.push_back(e);
        }
    }
    if (!free_gt.empty() && !free_est.empty()) {
        Eigen::MatrixXd dist(static_cast<Eigen::Index>(free_gt.size()), static_cast<Eigen::Index>(free_est.size()));
        for (std::size_t a = 0; a < free_gt.size(); ++a) {
            for (std::size_t b = 0; b < free_est.size(); ++b) {
                dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    (gt[free_gt[a]].ground - est[free_est[b]].ground).norm();
            }
        }
        const auto pairing = gated_matching(dist, threshold);
        for (std::size_t a = 0; a < free_gt.size(); ++a) {
            const int b = pairing[a];
            if (b < 0) {
                continue;
            }
            const std::size_t g = free_gt[a];
            const std::size_t e = free_est[static_cast<std::size_t>(b)];
            const auto prev = carry.find(gt[g].id);
            if (prev != carry.end() && prev->second != est[e].id) {
                ++out.mismatches;
            }
            record(g, e, dist(static_cast<Eigen::Index>(a), b));
        }
    }

    for (const auto& [g, e] : out.matches) {
        carry[g] = e;
    }
    out.misses = static_cast<int>(std::count(gt_used.begin(), gt_used.end(), false));
    out.false_positives = static_cast<int>(std::count(est_used.begin(), est_used.end(), false));
    return out;
}

MotRates mot_rates(std::span<const FrameMatch> frames) {
    double gt = 0;
    double misses = 0;
    double mismatches = 0;
    double fp = 0;
    for (const auto& f : frames) {
        gt += f.ground_truth;
        misses += f.misses;
        mismatches += f.mismatches;
        fp += f.false_positives;
    }
    if (gt <= 0) {
        throw Error(ErrorKind::NoGroundTruth, "no ground-truth objects in the evaluated frames");
    }
    return {misses / gt, mismatches / gt, fp / gt};
}

double motp(std::span<const FrameMatch> frames) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& f : frames) {
        for (double d : f.distances) {
            total += d;
        }
        count += f.distances.size();
    }
    if (count == 0) {
        throw Error(ErrorKind::NoMatches, "no matched objects");
    }
    return kCentimetresPerMetre * total / static_cast<double>(count);
}

OspamtSeries ospamt(const TrackSet& gt, const TrackSet& est, long first, long last, const OspamtParams& params) {
    params.validate();
    if (last < first) {
        throw Error(ErrorKind::EmptyInterval, fmt::format("empty frame interval [{}, {}]", first, last));
    }
    const double c = params.cutoff;
    const double p = params.order;
    const double cp = std::pow(c, p);
    auto truncated = [&](const Vec2& a, const Vec2& b) {
        return std::pow(std::min(kCentimetresPerMetre * (a - b).norm(), c), p);
    };

    std::set<int> gt_ids;
    std::set<int> est_ids;
    for (long k = first; k <= last; ++k) {
        for (const auto& t : frame_points(gt, k)) {
            gt_ids.insert(t.id);
        }
        for (const auto& t : frame_points(est, k)) {
            est_ids.insert(t.id);
        }
    }

    // Whole-sequence assignment of each estimated track to one true track.
    std::map<int, int> lambda;
    for (int e : est_ids) {
        double best = 0.0;
        for (long k = first; k <= last; ++k) {
            if (find_id(frame_points(est, k), e) != nullptr) {
                best += cp;
            }
        }
        int best_gt = -1;
        for (int g : gt_ids) {
            double cost = 0.0;
            for (long k = first; k <= last; ++k) {
                const auto* te = find_id(frame_points(est, k), e);
                const auto* tg = find_id(frame_points(gt, k), g);
                if (te != nullptr && tg != nullptr) {
                    cost += truncated(te->ground, tg->ground);
                } else if (te != nullptr || tg != nullptr) {
                    cost += cp;
                }
            }
            if (cost < best) {
                best = cost;
                best_gt = g;
            }
        }
        if (best_gt >= 0) {
            lambda[e] = best_gt;
        }
    }

    OspamtSeries out;
    for (long k = first; k <= last; ++k) {
        const auto gts = frame_points(gt, k);
        const auto ests = frame_points(est, k);
        const double n = static_cast<double>(std::max(gts.size(), ests.size()));
        double loc_sum = 0.0;
        double s = 0.0;
        double assigned_total = 0.0;
        for (const auto& g : gts) {
            double d_k = 0.0;
            double closest = std::numeric_limits<double>::infinity();
            int n_bar = 0;
            for (const auto& e : ests) {
                const auto it = lambda.find(e.id);
                if (it == lambda.end() || it->second != g.id) {
                    continue;
                }
                ++n_bar;
                closest = std::min(closest, truncated(g.ground, e.ground));
            }
            if (n_bar > 0) {
                d_k = closest;
            }
            loc_sum += d_k;
            s += std::max(n_bar - 1, 0) * (std::pow(params.delta, p) + cp);
            assigned_total += n_bar;
        }
        s += cp * (n - assigned_total);
        out.frames.push_back(k);
        if (n == 0) {
            out.loc.push_back(0.0);
            out.card.push_back(0.0);
        } else {
            out.loc.push_back(std::pow(loc_sum / n, 1.0 / p));
            out.card.push_back(std::pow(std::max(s, 0.0) / n, 1.0 / p));
        }
    }
    return out;
}

MotReport evaluate(const TrackSet& gt, const TrackSet& est, const MetricsConfig& config) {
    config.validate();
    std::set<long> frames;
    for (const auto& [k, v] : gt) {
        frames.insert(k);
    }
    for (const auto& [k, v] : est) {
        frames.insert(k);
    }
    if (frames.empty()) {
        throw Error(ErrorKind::EmptyInterval, "no frames to evaluate");
    }
    MotReport report;
    Correspondence carry;
    double dist_sum = 0.0;
    std::size_t match_count = 0;
    for (long k = *frames.begin(); k <= *frames.rbegin(); ++k) {
        auto m = match_frame(frame_points(gt, k), frame_points(est, k), config.match_threshold, carry);
        for (double d : m.distances) {
            dist_sum += d;
        }
        match_count += m.distances.size();
        report.motp_cumulative.push_back(match_count == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                          : kCentimetresPerMetre * dist_sum /
                                                                static_cast<double>(match_count));
        report.total_mismatches += m.mismatches;
        report.frame_indices.push_back(k);
        report.frames.push_back(std::move(m));
    }
    report.rates = mot_rates(report.frames);
    if (match_count > 0) {
        report.motp_cm = motp(report.frames);
    }
    report.ospamt = ospamt(gt, est, *frames.begin(), *frames.rbegin(), config.ospamt);
    return report;
}

std::vector<TrackPoint> load_ground_truth(const std::filesystem::path& path) {
    CsvReader in(path, {"frame", "id", "gx", "gy"});
    std::vector<TrackPoint> out;
    std::vector<std::string_view> f;
    while (in.next(f)) {
        out.push_back({static_cast<long>(in.field_int(f, 0)), static_cast<int>(in.field_int(f, 1)),
                       Vec2(in.field_double(f, 2), in.field_double(f, 3))});
    }
    return out;
}

void save_ground_truth(const std::filesystem::path& path, std::span<const TrackPoint> points) {
    CsvWriter out(path, "frame,id,gx,gy");
    for (const auto& p : points) {
        out.row(fmt::format("{},{},{:.6f},{:.6f}", p.frame, p.id, p.ground.x(), p.ground.y()));
    }
    out.close();
}

std::vector<TrackPoint> load_tracks(const std::filesystem::path& path) {
    CsvReader in(path, {"frame", "target_id", "gx", "gy", "px", "py"});
    std::vector<TrackPoint> out;
    std::vector<std::string_view> f;
    while (in.next(f)) {
        out.push_back({static_cast<long>(in.field_int(f, 0)), static_cast<int>(in.field_int(f, 1)),
                       Vec2(in.field_double(f, 2), in.field_double(f, 3))});
    }
    return out;
}

}  // namespace crowdtrack
