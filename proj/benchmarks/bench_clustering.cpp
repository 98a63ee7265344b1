#include "crowdtrack/foreground.hpp"
#include "crowdtrack/sim.hpp"
#include "crowdtrack/vbcluster.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace crowdtrack;

/// A crossing frame of the two_cross preset, when the two bodies overlap.
const FrameMeasurements& crossing_frame() {
    static const FrameMeasurements frame = [] {
        auto scene = preset_scenario("two_cross");
        return generate(scene).frames.at(150);
    }();
    return frame;
}

VbPriors frame_priors() {
    const ClusteringConfig config;
    const auto scene = preset_scenario("two_cross");
    const FrameGeometry geometry{scene.width, scene.height, {scene.red_region.mu}};
    const Homography h = scene.homography();
    std::vector<Vec2> targets;
    for (const auto& actor : scene.actors) {
        targets.push_back(h.ground_to_pixel(*actor_position(actor, 150, scene.fps)));
    }
    return init_priors(targets, geometry, config);
}

void BM_ClusterCrossing(benchmark::State& state) {
    const int stride = static_cast<int>(state.range(0));
    const auto frame = stride > 1 ? downsample(crossing_frame(), 0.0, stride) : crossing_frame();
    const auto priors = frame_priors();
    const ClusteringConfig config;
    int iterations = 0;
    for (auto _ : state) {
        const auto result = cluster(frame, priors, config);
        iterations = result.iterations;
        benchmark::DoNotOptimize(result);
    }
    state.counters["pixels"] = static_cast<double>(frame.measurements.size());
    state.counters["iterations"] = iterations;
}
BENCHMARK(BM_ClusterCrossing)->Arg(1)->Arg(3)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_Downsample(benchmark::State& state) {
    const auto& frame = crossing_frame();
    for (auto _ : state) {
        benchmark::DoNotOptimize(downsample(frame, 0.5, 9));
    }
}
BENCHMARK(BM_Downsample);

void BM_GenerateFrameSet(benchmark::State& state) {
    auto scene = preset_scenario("two_cross");
    scene.frames = 25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate(scene));
    }
}
BENCHMARK(BM_GenerateFrameSet)->Unit(benchmark::kMillisecond);

}  // namespace
