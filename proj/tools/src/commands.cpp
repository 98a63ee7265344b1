#include "commands.hpp"

#include "manifest.hpp"
#include "plot.hpp"

#include "crowdtrack/config.hpp"
#include "crowdtrack/csv_io.hpp"
#include "crowdtrack/error.hpp"
#include "crowdtrack/metrics.hpp"
#include "crowdtrack/sim.hpp"
#include "crowdtrack/tracker.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

namespace crowdtrack::cli {

namespace {

using Clock = std::chrono::steady_clock;

void require_file(const std::filesystem::path& path, const char* what) {
    if (path.empty()) {
        throw UsageError(fmt::format("missing {} path", what));
    }
    if (!std::filesystem::is_regular_file(path)) {
        throw UsageError(fmt::format("{} '{}' does not exist", what, path.string()));
    }
}

void prepare_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::Io, fmt::format("cannot create output directory '{}'", dir.string()));
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) {
            throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
        }
    }
    std::filesystem::rename(tmp, path);
}

RunConfig config_or_default(const std::filesystem::path& path) {
    if (path.empty()) {
        return RunConfig{};
    }
    require_file(path, "config file");
    return load_config(path);
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::string number(double v) { return std::isnan(v) ? std::string("nan") : fmt::format("{:.6f}", v); }

}  // namespace

void run_simulate(const SimulateOptions& options) {
    const auto t0 = Clock::now();
    if (options.preset.empty() == options.scenario.empty()) {
        throw UsageError("give exactly one of --preset or --scenario");
    }
    ScenarioConfig scenario;
    if (!options.preset.empty()) {
        scenario = preset_scenario(options.preset);
    } else {
        require_file(options.scenario, "scenario file");
        scenario = load_scenario(options.scenario);
    }
    if (options.seed) {
        scenario.seed = *options.seed;
    }
    const Rendering rendering = generate(scenario);
    prepare_out_dir(options.out);

    const auto measurements = options.out / "measurements.csv";
    const auto ground_truth = options.out / "ground_truth.csv";
    const auto calibration = options.out / "calibration.csv";
    const auto tracker_ini = options.out / "tracker.ini";
    const auto scenario_ini = options.out / "scenario.ini";
    save_measurements(measurements, rendering.frames);
    save_ground_truth(ground_truth, rendering.ground_truth);
    save_calibration(calibration, scenario.calibration);

    RunConfig run;
    run.tracker.width = scenario.width;
    run.tracker.height = scenario.height;
    run.tracker.frames = scenario.frames;
    run.tracker.association.clutter_density = 1.0 / (static_cast<double>(scenario.width) * scenario.height);
    run.tracker.social_force.dt = 1.0 / scenario.fps;
    run.tracker.red_regions = {scenario.red_region};
    // Settings tuned on the synthetic presets. Prediction expands only every
    // S-th particle into S interaction modes, so the particle set grows with
    // the mode count; a smaller velocity noise and a tighter entry zone keep
    // identities through occlusion and time deaths to the actual exit.
    run.tracker.particles = 540;
    run.tracker.social_force.noise_velocity = 0.05;
    for (auto& region : run.tracker.red_regions) {
        region.membership_sigma = 1.0;
    }
    save_config(tracker_ini, run);
    write_text(scenario_ini, format_scenario(scenario));

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_path = options.preset.empty() ? options.scenario.string() : "preset:" + options.preset;
    manifest.outputs = {measurements, ground_truth, calibration, tracker_ini, scenario_ini};
    manifest.seed = scenario.seed;
    manifest.wall_seconds = seconds_since(t0);
    manifest.write(options.out);
    std::cout << fmt::format("simulated '{}': {} frames, {} actors -> {}\n", scenario.name, scenario.frames,
                             scenario.actors.size(), options.out.string());
}

void run_track(const TrackOptions& options) {
    const auto t0 = Clock::now();
    require_file(options.measurements, "measurements file");
    require_file(options.calibration, "calibration file");
    const RunConfig run = config_or_default(options.config);
    const auto pairs = load_calibration(options.calibration);
    const Homography homography = homography_from_points(pairs);
    const auto frames = load_measurements(options.measurements, run.tracker.frames);
    prepare_out_dir(options.out);

    const auto tracks_path = options.out / "tracks.csv";
    const auto frames_path = options.out / "frames.csv";
    const auto timing_path = options.out / "timing.csv";
    const auto clusters_path = options.out / "clusters.csv";
    const auto assoc_path = options.out / "assoc.csv";

    CsvWriter tracks(tracks_path, "frame,target_id,gx,gy,px,py");
    CsvWriter diag(frames_path,
                   "frame,targets,clusters,measurements,measurements_clustered,downsampled,vb_iterations,"
                   "lower_bound,hypotheses,p_birth,p_death,count_change,degraded,reason");
    CsvWriter timing(timing_path, "frame,wall_ms");
    std::optional<CsvWriter> clusters;
    std::optional<CsvWriter> assoc;
    if (options.dump_clusters) {
        clusters.emplace(clusters_path, kClusterDumpHeader);
    }
    if (options.dump_assoc) {
        assoc.emplace(assoc_path, "frame,target,cluster,assoc_prob");
    }

    Tracker tracker(run.tracker, homography, options.seed);
    std::size_t degraded = 0;
    for (const auto& frame : frames) {
        const FrameResult r = tracker.step(frame);
        for (const auto& e : r.estimates) {
            tracks.row(fmt::format("{},{},{:.6f},{:.6f},{:.3f},{:.3f}", r.frame_index, e.id, e.ground.x(),
                                   e.ground.y(), e.pixel.x(), e.pixel.y()));
        }
        const auto& d = r.diagnostics;
        degraded += d.degraded ? 1 : 0;
        diag.row(fmt::format("{},{},{},{},{},{},{},{:.9g},{},{:.6f},{:.6f},{},{},{}", r.frame_index, r.target_count,
                             r.clusters.clusters.size(), d.measurements, d.measurements_clustered,
                             d.downsampled ? 1 : 0, d.vb_iterations, d.lower_bound, d.hypotheses, d.p_birth, d.p_death,
                             d.count_change, d.degraded ? 1 : 0, sanitize(d.degraded_reason)));
        timing.row(fmt::format("{},{:.3f}", r.frame_index, d.wall_ms));
        if (clusters) {
            append_cluster_dump(*clusters, r.clustered_frame, r.clusters);
        }
        if (assoc) {
            for (std::size_t i = 0; i < r.association.targets(); ++i) {
                const int id = r.association_target_ids.at(i);
                assoc->row(fmt::format("{},{},-1,{:.9f}", r.frame_index, id, r.association.undetected(i)));
                for (std::size_t q = 0; q < r.association.clusters(); ++q) {
                    assoc->row(fmt::format("{},{},{},{:.9f}", r.frame_index, id, q, r.association.assoc(i, q)));
                }
            }
        }
    }
    tracks.close();
    diag.close();
    timing.close();

    RunManifest manifest;
    manifest.command = "track";
    manifest.config_path = options.config.string();
    manifest.inputs = {options.measurements, options.calibration};
    manifest.outputs = {tracks_path, frames_path, timing_path};
    if (clusters) {
        clusters->close();
        manifest.outputs.push_back(clusters_path);
    }
    if (assoc) {
        assoc->close();
        manifest.outputs.push_back(assoc_path);
    }
    manifest.seed = options.seed;
    manifest.wall_seconds = seconds_since(t0);
    manifest.write(options.out);
    std::cout << fmt::format("tracked {} frames ({} degraded) -> {}\n", frames.size(), degraded,
                             options.out.string());
}

void run_evaluate(const EvaluateOptions& options) {
    const auto t0 = Clock::now();
    require_file(options.tracks, "tracks file");
    require_file(options.ground_truth, "ground-truth file");
    const RunConfig run = config_or_default(options.config);
    const auto gt_points = load_ground_truth(options.ground_truth);
    const auto est_points = load_tracks(options.tracks);
    const TrackSet gt = group_by_frame(gt_points);
    const TrackSet est = group_by_frame(est_points);
    if (gt.empty()) {
        throw Error(ErrorKind::NoGroundTruth, "ground-truth file has no rows");
    }
    if (!est.empty() && (est.rbegin()->first < gt.begin()->first || est.begin()->first > gt.rbegin()->first)) {
        throw Error(ErrorKind::NoOverlap, "tracks and ground truth cover disjoint frame ranges");
    }

    std::map<long, long> cluster_counts;
    if (!options.frames.empty()) {
        require_file(options.frames, "frames diagnostics file");
        std::ifstream in(options.frames);
        std::string line;
        std::getline(in, line);
        const auto header = split_csv_line(line);
        if (header.size() < 3 || header[0] != "frame" || header[2] != "clusters") {
            throw Error(ErrorKind::MalformedInput,
                        fmt::format("{}: not a tracker frames.csv", options.frames.string()));
        }
        std::size_t row = 1;
        while (std::getline(in, line)) {
            ++row;
            const auto f = split_csv_line(line);
            long long frame = 0, count = 0;
            if (f.size() < 3 || !parse_int(f[0], frame) || !parse_int(f[2], count)) {
                throw Error(ErrorKind::MalformedInput, fmt::format("{}: row {}: bad diagnostics row",
                                                                   options.frames.string(), row));
            }
            cluster_counts[static_cast<long>(frame)] = static_cast<long>(count);
        }
    }

    const MotReport report = evaluate(gt, est, run.metrics);
    prepare_out_dir(options.out);
    const auto report_path = options.out / "report.csv";
    const auto counts_path = options.out / "counts.csv";
    const auto summary_path = options.out / "summary.txt";

    CsvWriter rep(report_path, "frame,loc,card,misses,fp,mismatches,motp_cum");
    CsvWriter counts(counts_path, cluster_counts.empty() ? "frame,estimated,truth" : "frame,estimated,truth,clusters");
    for (std::size_t k = 0; k < report.frames.size(); ++k) {
        const long frame = report.frame_indices[k];
        const auto& m = report.frames[k];
        rep.row(fmt::format("{},{},{},{},{},{},{}", frame, number(report.ospamt.loc[k]), number(report.ospamt.card[k]),
                            m.misses, m.false_positives, m.mismatches, number(report.motp_cumulative[k])));
        const auto e = est.find(frame);
        const std::size_t n_est = e == est.end() ? 0 : e->second.size();
        std::string row = fmt::format("{},{},{}", frame, n_est, m.ground_truth);
        if (!cluster_counts.empty()) {
            const auto c = cluster_counts.find(frame);
            row += c == cluster_counts.end() ? std::string(",nan") : fmt::format(",{}", c->second);
        }
        counts.row(row);
    }
    rep.close();
    counts.close();

    const double loc_mean = std::accumulate(report.ospamt.loc.begin(), report.ospamt.loc.end(), 0.0) /
                            static_cast<double>(report.ospamt.loc.size());
    const double card_mean = std::accumulate(report.ospamt.card.begin(), report.ospamt.card.end(), 0.0) /
                             static_cast<double>(report.ospamt.card.size());
    long gt_objects = 0;
    for (const auto& f : report.frames) {
        gt_objects += f.ground_truth;
    }
    std::string summary;
    summary += fmt::format("frames                 {}\n", report.frames.size());
    summary += fmt::format("ground_truth_objects   {}\n", gt_objects);
    summary += fmt::format("miss_rate              {:.6f}\n", report.rates.miss_rate);
    summary += fmt::format("mismatch_rate          {:.6f}\n", report.rates.mismatch_rate);
    summary += fmt::format("false_positive_rate    {:.6f}\n", report.rates.false_positive_rate);
    summary += fmt::format("mismatches             {}\n", report.total_mismatches);
    summary += fmt::format("motp_cm                {}\n", report.motp_cm ? number(*report.motp_cm) : "nan");
    summary += fmt::format("OSPAMT-variant loc_cm  {:.6f}  (mean over frames, c={}, delta={}, p={})\n", loc_mean,
                           run.metrics.ospamt.cutoff, run.metrics.ospamt.delta, run.metrics.ospamt.order);
    summary += fmt::format("OSPAMT-variant card_cm {:.6f}\n", card_mean);
    write_text(summary_path, summary);
    std::cout << summary;

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config_path = options.config.string();
    manifest.inputs = {options.tracks, options.ground_truth};
    if (!options.frames.empty()) {
        manifest.inputs.push_back(options.frames);
    }
    manifest.outputs = {report_path, counts_path, summary_path};
    manifest.wall_seconds = seconds_since(t0);
    manifest.write(options.out);
}

void run_cluster_debug(const ClusterDebugOptions& options) {
    const auto t0 = Clock::now();
    require_file(options.measurements, "measurements file");
    if (options.priors.size() % 2 != 0) {
        throw UsageError("--priors needs x,y pairs");
    }
    const RunConfig run = config_or_default(options.config);
    const auto frames = load_measurements(options.measurements, run.tracker.frames);
    const auto it = std::find_if(frames.begin(), frames.end(),
                                 [&](const FrameMeasurements& f) { return f.frame_index == options.frame; });
    if (it == frames.end()) {
        throw UsageError(fmt::format("frame {} is not in '{}'", options.frame, options.measurements.string()));
    }
    FrameGeometry geometry{run.tracker.width, run.tracker.height, {}};
    for (const auto& r : run.tracker.red_regions) {
        geometry.boundary_means.push_back(r.mu);
    }
    VbPriors priors;
    if (options.priors.empty()) {
        priors = grid_priors(geometry, run.tracker.clustering);
    } else {
        std::vector<Vec2> targets;
        for (std::size_t i = 0; i < options.priors.size(); i += 2) {
            targets.emplace_back(options.priors[i], options.priors[i + 1]);
        }
        priors = init_priors(targets, geometry, run.tracker.clustering);
    }
    prepare_out_dir(options.out);
    const auto bound_path = options.out / "bound.csv";
    const auto clusters_path = options.out / "clusters.csv";
    const auto summary_path = options.out / "cluster_summary.csv";

    CsvWriter bound(bound_path, "iteration,lower_bound");
    const ClusterSet result = cluster(*it, priors, run.tracker.clustering,
                                      [&](int iteration, const Responsibilities&, double value) {
                                          bound.row(fmt::format("{},{:.9g}", iteration, value));
                                      });
    bound.close();
    CsvWriter dump(clusters_path, kClusterDumpHeader);
    append_cluster_dump(dump, *it, result);
    dump.close();
    CsvWriter summary(summary_path, "cluster_id,mean_x,mean_y,cov_xx,cov_xy,cov_yy,pixels");
    for (const auto& c : result.clusters) {
        summary.row(fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{}", c.id, c.mean.x(), c.mean.y(),
                                c.covariance(0, 0), c.covariance(0, 1), c.covariance(1, 1), c.pixel_count()));
    }
    summary.close();

    RunManifest manifest;
    manifest.command = "cluster-debug";
    manifest.config_path = options.config.string();
    manifest.inputs = {options.measurements};
    manifest.outputs = {bound_path, clusters_path, summary_path};
    manifest.wall_seconds = seconds_since(t0);
    manifest.write(options.out);
    std::cout << fmt::format("frame {}: {} clusters after {} iterations ({})\n", options.frame,
                             result.clusters.size(), result.iterations,
                             result.converged ? "converged" : "iteration cap");
}

int run_plot(const PlotOptions& options) {
    if (options.inputs.empty()) {
        throw UsageError("plot needs at least one --input");
    }
    std::vector<SeriesTable> tables;
    for (const auto& path : options.inputs) {
        require_file(path, "series file");
        tables.push_back(read_series(path));
    }
    prepare_out_dir(options.out);
    int warnings = 0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto stem = options.inputs[i].stem().string();
        if (tables[i].frames.empty() || tables[i].names.empty()) {
            std::cerr << fmt::format("warning: '{}' has no data; writing empty axes\n", options.inputs[i].string());
            ++warnings;
        }
        write_text(options.out / (stem + ".svg"), render_svg(tables[i], stem));
    }
    return warnings;
}

}  // namespace crowdtrack::cli
