#pragma once

#include "crowdtrack/coords.hpp"
#include "crowdtrack/foreground.hpp"
#include "crowdtrack/lifecycle.hpp"
#include "crowdtrack/metrics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace crowdtrack {

inline constexpr double kMaxActorSpeed = 2.5;  ///< m/s

/// One stay of an actor in the scene. The actor appears at the first waypoint
/// on `entry_frame`, walks the polyline at `speed`, waits at the last waypoint
/// and is present up to and including `exit_frame` (-1: until the last frame).
struct Visit {
    long entry_frame = 0;
    long exit_frame = -1;
    double speed = 1.0;  ///< m/s
    std::vector<Vec2> waypoints;  ///< ground metres
};

struct ActorConfig {
    int id = 1;
    std::vector<Visit> visits;
    double radius_x = 12.0;  ///< body ellipse half-width, px
    double radius_y = 30.0;  ///< body ellipse half-height, px
    std::array<std::uint8_t, 3> color{200, 60, 60};
    double color_noise = 8.0;  ///< per-channel std
};

struct ScenarioConfig {
    std::string name = "custom";
    long frames = 100;
    int width = 640;
    int height = 480;
    double fps = 25.0;
    std::array<CalibrationPair, 4> calibration;
    Vec2 ground_min = Vec2(0.0, 0.0);  ///< monitored ground area, metres
    Vec2 ground_max = Vec2(6.0, 5.0);
    RedRegion red_region;
    std::vector<ActorConfig> actors;
    std::uint64_t seed = 7;

    /// Throws ConfigInvalid.
    void validate() const;
    [[nodiscard]] Homography homography() const;
};

/// Ground position of an actor at `frame`, or nullopt when it is not in the scene.
[[nodiscard]] std::optional<Vec2> actor_position(const ActorConfig& actor, long frame, double fps);

struct Rendering {
    std::vector<FrameMeasurements> frames;
    std::vector<TrackPoint> ground_truth;
};

/// Renders every frame: each present actor is a filled ellipse centred on its
/// projected position; nearer actors (larger pixel y) hide the pixels of
/// farther ones. Throws ConfigInvalid.
[[nodiscard]] Rendering generate(const ScenarioConfig& config);

/// Pixel count of one actor rendered alone at `frame`.
[[nodiscard]] std::size_t isolated_pixel_count(const ScenarioConfig& config, std::size_t actor, long frame);

[[nodiscard]] std::vector<ScenarioConfig> preset_scenarios();
/// Throws ConfigInvalid listing the available names.
[[nodiscard]] ScenarioConfig preset_scenario(const std::string& name);

/// Default image calibration shared by the presets: a 6 m x 5 m floor.
[[nodiscard]] std::array<CalibrationPair, 4> default_calibration();

/// INI grammar: [scenario] name, frames, width, height, fps, seed,
/// ground_min_x/y, ground_max_x/y; [calibration] p{1..4}_{px,py,gx,gy};
/// [red_region] as in the tracker config; [actorN] id, radius_x, radius_y,
/// color_r/g/b, color_noise and visit1, visit2, ... each holding the
/// whitespace-separated numbers "entry exit speed x1 y1 x2 y2 ...".
[[nodiscard]] ScenarioConfig parse_scenario(std::istream& in, const std::string& origin = "<scenario>");
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& path);
[[nodiscard]] std::string format_scenario(const ScenarioConfig& config);

}  // namespace crowdtrack
