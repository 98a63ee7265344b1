#include "commands.hpp"

#include "crowdtrack/error.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code_for(crowdtrack::ErrorKind kind) {
    using crowdtrack::ErrorKind;
    switch (kind) {
    case ErrorKind::ConfigInvalid:
    case ErrorKind::MalformedInput: return kExitUsage;
    default: return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = crowdtrack::cli;
    CLI::App app{"crowdtrack: multi-target pedestrian tracking from foreground pixels"};
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Render a synthetic scenario to measurement and ground-truth CSVs");
    simulate->add_option("--preset", sim.preset, "Preset scenario name");
    simulate->add_option("--scenario,--config", sim.scenario, "Scenario INI file");
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Override the scenario seed");
    simulate->add_option("--out", sim.out, "Output directory")->required();

    cli::TrackOptions track;
    auto* track_cmd = app.add_subcommand("track", "Run the tracker over a measurement CSV");
    track_cmd->add_option("--measurements", track.measurements, "Foreground pixel CSV")->required();
    track_cmd->add_option("--calibration", track.calibration, "Four-point calibration CSV")->required();
    track_cmd->add_option("--config", track.config, "Tracker INI file");
    track_cmd->add_option("--seed", track.seed, "Random seed")->capture_default_str();
    track_cmd->add_option("--out", track.out, "Output directory")->required();
    track_cmd->add_flag("--dump-clusters", track.dump_clusters, "Also write clusters.csv");
    track_cmd->add_flag("--dump-assoc", track.dump_assoc, "Also write assoc.csv");

    cli::EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score tracks against ground truth (CLEAR MOT, OSPAMT variant)");
    eval_cmd->add_option("--tracks", eval.tracks, "tracks.csv from the track command")->required();
    eval_cmd->add_option("--ground-truth", eval.ground_truth, "Ground-truth CSV")->required();
    eval_cmd->add_option("--config", eval.config, "INI file with a [metrics] section");
    eval_cmd->add_option("--frames", eval.frames, "frames.csv from the track command (adds cluster counts)");
    eval_cmd->add_option("--out", eval.out, "Output directory")->required();

    cli::ClusterDebugOptions dbg;
    auto* dbg_cmd = app.add_subcommand("cluster-debug", "Run variational clustering on one frame");
    dbg_cmd->add_option("--measurements", dbg.measurements, "Foreground pixel CSV")->required();
    dbg_cmd->add_option("--frame", dbg.frame, "Frame index")->required();
    dbg_cmd->add_option("--config", dbg.config, "Tracker INI file");
    dbg_cmd->add_option("--priors", dbg.priors, "Prior target pixels as x,y,x,y,...")->delimiter(',');
    dbg_cmd->add_option("--out", dbg.out, "Output directory")->required();

    cli::PlotOptions plot;
    auto* plot_cmd = app.add_subcommand("plot", "Render frame-indexed CSV series as SVG line plots");
    plot_cmd->add_option("--input", plot.inputs, "CSV files whose first column is frame")->required();
    plot_cmd->add_option("--out", plot.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            if (sim_seed_opt->count() > 0) {
                sim.seed = sim_seed;
            }
            cli::run_simulate(sim);
        } else if (track_cmd->parsed()) {
            cli::run_track(track);
        } else if (eval_cmd->parsed()) {
            cli::run_evaluate(eval);
        } else if (dbg_cmd->parsed()) {
            cli::run_cluster_debug(dbg);
        } else if (plot_cmd->parsed()) {
            cli::run_plot(plot);
        }
    } catch (const cli::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const crowdtrack::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
