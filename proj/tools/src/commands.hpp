#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdtrack::cli {

/// Bad invocation (missing input file, conflicting flags); maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulateOptions {
    std::string preset;
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out;
};

struct TrackOptions {
    std::filesystem::path measurements;
    std::filesystem::path calibration;
    std::filesystem::path config;
    std::uint64_t seed = 7;
    std::filesystem::path out;
    bool dump_clusters = false;
    bool dump_assoc = false;
};

struct EvaluateOptions {
    std::filesystem::path tracks;
    std::filesystem::path ground_truth;
    std::filesystem::path config;
    std::filesystem::path frames;  ///< optional tracker diagnostics, adds a clusters column to counts.csv
    std::filesystem::path out;
};

struct ClusterDebugOptions {
    std::filesystem::path measurements;
    std::filesystem::path config;
    long frame = 0;
    std::vector<double> priors;  ///< flattened x,y pairs; empty means grid priors
    std::filesystem::path out;
};

struct PlotOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out;
};

void run_simulate(const SimulateOptions& options);
void run_track(const TrackOptions& options);
void run_evaluate(const EvaluateOptions& options);
void run_cluster_debug(const ClusterDebugOptions& options);
/// Returns the number of warnings emitted (empty inputs).
int run_plot(const PlotOptions& options);

}  // namespace crowdtrack::cli
