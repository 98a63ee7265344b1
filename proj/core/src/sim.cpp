#include "crowdtrack/sim.hpp"

#include "crowdtrack/error.hpp"
#include "crowdtrack/socialforce.hpp"
#include "ini.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace crowdtrack {

namespace {

double polyline_length(const std::vector<Vec2>& w) {
    double total = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        total += (w[i] - w[i - 1]).norm();
    }
    return total;
}

Vec2 along_polyline(const std::vector<Vec2>& w, double distance) {
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double seg = (w[i] - w[i - 1]).norm();
        if (distance <= seg && seg > 0) {
            return w[i - 1] + (distance / seg) * (w[i] - w[i - 1]);
        }
        distance -= seg;
    }
    return w.back();
}

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::ConfigInvalid, message); }

struct PlacedActor {
    std::size_t index = 0;
    Vec2 pixel = Vec2::Zero();
};

/// Visits pixels of an actor's ellipse that lie inside the frame, row-major.
template <typename Fn>
void for_each_body_pixel(const ActorConfig& a, const Vec2& centre, int width, int height, Fn&& fn) {
    const int y0 = std::max(0, static_cast<int>(std::ceil(centre.y() - a.radius_y)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(centre.y() + a.radius_y)));
    const int x0 = std::max(0, static_cast<int>(std::ceil(centre.x() - a.radius_x)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(centre.x() + a.radius_x)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double u = (x - centre.x()) / a.radius_x;
            const double v = (y - centre.y()) / a.radius_y;
            if (u * u + v * v <= 1.0) {
                fn(x, y);
            }
        }
    }
}

Rng substream(std::uint64_t seed, long frame, int actor) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(actor)};
    return Rng(seq);
}

std::uint8_t jitter(std::uint8_t base, double noise) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(base + noise), 0L, 255L));
}

}  // namespace

std::optional<Vec2> actor_position(const ActorConfig& actor, long frame, double fps) {
    for (const auto& v : actor.visits) {
        const bool present = frame >= v.entry_frame && (v.exit_frame < 0 || frame <= v.exit_frame);
        if (present) {
            const double walked = v.speed * static_cast<double>(frame - v.entry_frame) / fps;
            return along_polyline(v.waypoints, walked);
        }
    }
    return std::nullopt;
}

Homography ScenarioConfig::homography() const { return homography_from_points(calibration); }

void ScenarioConfig::validate() const {
    if (frames <= 0 || width <= 0 || height <= 0 || !(fps > 0)) {
        invalid("scenario needs frames, width, height and fps > 0");
    }
    if (!(ground_max.x() > ground_min.x()) || !(ground_max.y() > ground_min.y())) {
        invalid("ground area is empty");
    }
    red_region.validate();
    const Homography h = [&] {
        try {
            return homography();
        } catch (const Error& e) {
            invalid(fmt::format("calibration: {}", e.what()));
        }
    }();
    std::set<int> ids;
    for (const auto& a : actors) {
        const std::string who = fmt::format("actor {}", a.id);
        if (!ids.insert(a.id).second) {
            invalid(fmt::format("{} defined twice", who));
        }
        if (!(a.radius_x > 0) || !(a.radius_y > 0) || !(a.color_noise >= 0)) {
            invalid(fmt::format("{}: radii must be positive and colour noise nonnegative", who));
        }
        if (a.visits.empty()) {
            invalid(fmt::format("{} has no visits", who));
        }
        long previous_exit = -1;
        for (std::size_t k = 0; k < a.visits.size(); ++k) {
            const auto& v = a.visits[k];
            if (v.waypoints.empty()) {
                invalid(fmt::format("{}: visit {} has no waypoints", who, k + 1));
            }
            if (v.entry_frame < 0 || v.entry_frame >= frames || v.entry_frame <= previous_exit ||
                (k > 0 && previous_exit < 0)) {
                invalid(fmt::format("{}: visit {} entry frame out of order or range", who, k + 1));
            }
            if (v.exit_frame >= 0 && (v.exit_frame < v.entry_frame || v.exit_frame >= frames)) {
                invalid(fmt::format("{}: visit {} exit frame out of range", who, k + 1));
            }
            if (!(v.speed > 0) || v.speed > kMaxActorSpeed) {
                invalid(fmt::format("{}: visit {} speed must lie in (0, {}] m/s", who, k + 1, kMaxActorSpeed));
            }
            for (const auto& w : v.waypoints) {
                if ((w.array() < ground_min.array()).any() || (w.array() > ground_max.array()).any()) {
                    invalid(fmt::format("{}: waypoint ({}, {}) outside the monitored area", who, w.x(), w.y()));
                }
            }
            if (v.entry_frame > 0 && !red_region.contains(h.ground_to_pixel(v.waypoints.front()))) {
                invalid(fmt::format("{}: visit {} must enter through the red region", who, k + 1));
            }
            if (v.exit_frame >= 0 && v.exit_frame < frames - 1) {
                const auto last = actor_position(a, v.exit_frame, fps);
                if (!last || !red_region.contains(h.ground_to_pixel(*last))) {
                    invalid(fmt::format("{}: visit {} must exit through the red region", who, k + 1));
                }
            }
            previous_exit = v.exit_frame;
        }
    }
}

std::size_t isolated_pixel_count(const ScenarioConfig& config, std::size_t actor, long frame) {
    const auto& a = config.actors.at(actor);
    const auto pos = actor_position(a, frame, config.fps);
    if (!pos) {
        return 0;
    }
    const Vec2 centre = config.homography().ground_to_pixel(*pos);
    std::size_t count = 0;
    for_each_body_pixel(a, centre, config.width, config.height, [&](int, int) { ++count; });
    return count;
}

Rendering generate(const ScenarioConfig& config) {
    config.validate();
    const Homography h = config.homography();
    Rendering out;
    out.frames.reserve(static_cast<std::size_t>(config.frames));
    const std::size_t area = static_cast<std::size_t>(config.width) * static_cast<std::size_t>(config.height);
    std::vector<int> owner(area);
    std::vector<std::array<std::uint8_t, 3>> colour(area);

    for (long k = 0; k < config.frames; ++k) {
        std::vector<PlacedActor> present;
        for (std::size_t i = 0; i < config.actors.size(); ++i) {
            if (const auto pos = actor_position(config.actors[i], k, config.fps)) {
                present.push_back({i, h.ground_to_pixel(*pos)});
                out.ground_truth.push_back({k, config.actors[i].id, *pos});
            }
        }
        // Paint far to near so nearer bodies overwrite the ones behind them.
        std::stable_sort(present.begin(), present.end(),
                         [](const PlacedActor& a, const PlacedActor& b) { return a.pixel.y() < b.pixel.y(); });
        std::fill(owner.begin(), owner.end(), -1);
        for (const auto& p : present) {
            const auto& a = config.actors[p.index];
            Rng rng = substream(config.seed, k, a.id);
            std::normal_distribution<double> noise(0.0, a.color_noise);
            for_each_body_pixel(a, p.pixel, config.width, config.height, [&](int x, int y) {
                const std::size_t idx = static_cast<std::size_t>(y) * config.width + x;
                owner[idx] = static_cast<int>(p.index);
                const double nr = noise(rng);
                const double ng = noise(rng);
                const double nb = noise(rng);
                colour[idx] = {jitter(a.color[0], nr), jitter(a.color[1], ng), jitter(a.color[2], nb)};
            });
        }
        FrameMeasurements frame;
        frame.frame_index = k;
        for (int y = 0; y < config.height; ++y) {
            for (int x = 0; x < config.width; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * config.width + x;
                if (owner[idx] >= 0) {
                    frame.measurements.push_back({x, y, colour[idx][0], colour[idx][1], colour[idx][2]});
                }
            }
        }
        out.frames.push_back(std::move(frame));
    }
    std::stable_sort(out.ground_truth.begin(), out.ground_truth.end(), [](const TrackPoint& a, const TrackPoint& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    return out;
}

std::array<CalibrationPair, 4> default_calibration() {
    return {{{Vec2(80, 440), Vec2(0, 0)},
             {Vec2(560, 440), Vec2(6, 0)},
             {Vec2(520, 60), Vec2(6, 5)},
             {Vec2(120, 60), Vec2(0, 5)}}};
}

namespace {

ScenarioConfig base_scenario(std::string name, long frames) {
    ScenarioConfig s;
    s.name = std::move(name);
    s.frames = frames;
    s.calibration = default_calibration();
    s.red_region.mu = s.homography().ground_to_pixel(Vec2(0.3, 2.5));
    s.red_region.sigma = Vec2(30.0 * 30.0, 40.0 * 40.0).asDiagonal();
    return s;
}

Vec2 door() { return Vec2(0.3, 2.5); }

/// A visit that walks `waypoints` so it arrives `dwell` frames before `exit`.
Visit timed_visit(long entry, long exit, std::vector<Vec2> waypoints, double fps, long dwell = 2) {
    Visit v;
    v.entry_frame = entry;
    v.exit_frame = exit;
    v.speed = polyline_length(waypoints) * fps / static_cast<double>(exit - dwell - entry);
    v.waypoints = std::move(waypoints);
    return v;
}

Visit open_visit(long entry, double speed, std::vector<Vec2> waypoints) {
    Visit v;
    v.entry_frame = entry;
    v.exit_frame = -1;
    v.speed = speed;
    v.waypoints = std::move(waypoints);
    return v;
}

ActorConfig actor(int id, std::array<std::uint8_t, 3> colour, std::vector<Visit> visits) {
    ActorConfig a;
    a.id = id;
    a.color = colour;
    a.visits = std::move(visits);
    return a;
}

}  // namespace

std::vector<ScenarioConfig> preset_scenarios() {
    std::vector<ScenarioConfig> out;

    {
        auto s = base_scenario("single_walk", 200);
        s.actors.push_back(
            actor(1, {200, 50, 50}, {open_visit(0, 1.0, {Vec2(1.5, 1.5), Vec2(4.5, 1.5), Vec2(4.5, 3.5), Vec2(2.0, 3.5)})}));
        out.push_back(std::move(s));
    }
    {
        // Walking toward each other on nearly the same line: one full crossing.
        auto s = base_scenario("two_cross", 300);
        s.actors.push_back(actor(1, {210, 40, 40}, {open_visit(0, 0.4, {Vec2(1.6, 2.0), Vec2(5.2, 2.0)})}));
        s.actors.push_back(actor(2, {40, 60, 210}, {open_visit(0, 0.4, {Vec2(5.2, 2.06), Vec2(1.6, 2.06)})}));
        out.push_back(std::move(s));
    }
    {
        // Count series 1 -> 2 -> 3 -> 2 -> 3; actor 2 leaves and comes back.
        auto s = base_scenario("three_cross_reentry", 400);
        s.actors.push_back(actor(1, {210, 40, 40},
                                 {open_visit(0, 0.6, {Vec2(2.0, 1.0), Vec2(4.5, 1.0), Vec2(4.5, 3.5), Vec2(2.5, 3.5)})}));
        s.actors.push_back(actor(2, {40, 200, 60},
                                 {timed_visit(40, 220,
                                              {door(), Vec2(2.5, 2.5), Vec2(3.0, 3.8), Vec2(1.4, 3.8), door()}, s.fps),
                                  open_visit(300, 0.8, {door(), Vec2(3.0, 2.6)})}));
        s.actors.push_back(
            actor(3, {40, 60, 210}, {open_visit(100, 0.8, {door(), Vec2(3.2, 1.8), Vec2(5.0, 2.4)})}));
        out.push_back(std::move(s));
    }
    {
        auto s = base_scenario("five_corridor", 300);
        s.actors.push_back(actor(1, {210, 40, 40}, {open_visit(0, 0.8, {Vec2(1.5, 1.0), Vec2(5.2, 1.2)})}));
        s.actors.push_back(actor(2, {40, 200, 60}, {open_visit(0, 0.7, {Vec2(5.2, 1.9), Vec2(1.5, 1.9)})}));
        s.actors.push_back(actor(3, {40, 60, 210}, {open_visit(0, 0.6, {Vec2(1.6, 3.0), Vec2(5.2, 3.0)})}));
        s.actors.push_back(actor(4, {220, 200, 40}, {open_visit(0, 0.9, {Vec2(5.0, 4.2), Vec2(1.6, 4.0)})}));
        s.actors.push_back(actor(5, {180, 60, 200}, {open_visit(0, 0.5, {Vec2(3.3, 0.4), Vec2(3.3, 4.6)})}));
        out.push_back(std::move(s));
    }
    return out;
}

ScenarioConfig preset_scenario(const std::string& name) {
    std::vector<std::string> names;
    for (auto& s : preset_scenarios()) {
        if (s.name == name) {
            return s;
        }
        names.push_back(s.name);
    }
    throw Error(ErrorKind::ConfigInvalid,
                fmt::format("unknown preset '{}'; available: {}", name, fmt::join(names, ", ")));
}

ScenarioConfig parse_scenario(std::istream& in, const std::string& origin) {
    const ini::Tree tree = ini::read(in, origin);
    ScenarioConfig s;
    s.calibration = default_calibration();
    double gmin_x = s.ground_min.x(), gmin_y = s.ground_min.y();
    double gmax_x = s.ground_max.x(), gmax_y = s.ground_max.y();
    long seed_long = static_cast<long>(s.seed);
    bool have_region = false;
    double mu_x = 0, mu_y = 0, sxx = 1, sxy = 0, syy = 1, msig = 2;

    for (const auto& [name, body] : tree) {
        if (!body.data().empty()) {
            invalid(fmt::format("{}: key '{}' outside any section", origin, name));
        }
        if (name == "scenario") {
            ini::Section sec("scenario");
            sec.bind("name", s.name)
                .bind("frames", s.frames)
                .bind("width", s.width)
                .bind("height", s.height)
                .bind("fps", s.fps)
                .bind("seed", seed_long)
                .bind("ground_min_x", gmin_x)
                .bind("ground_min_y", gmin_y)
                .bind("ground_max_x", gmax_x)
                .bind("ground_max_y", gmax_y);
            sec.apply(body);
        } else if (name == "calibration") {
            ini::Section sec("calibration");
            for (int i = 0; i < 4; ++i) {
                auto& c = s.calibration[static_cast<std::size_t>(i)];
                sec.bind(fmt::format("p{}_px", i + 1), c.pixel.x())
                    .bind(fmt::format("p{}_py", i + 1), c.pixel.y())
                    .bind(fmt::format("p{}_gx", i + 1), c.ground.x())
                    .bind(fmt::format("p{}_gy", i + 1), c.ground.y());
            }
            sec.apply(body);
        } else if (name == "red_region") {
            have_region = true;
            ini::Section sec("red_region");
            sec.bind("mu_x", mu_x)
                .bind("mu_y", mu_y)
                .bind("sigma_xx", sxx)
                .bind("sigma_xy", sxy)
                .bind("sigma_yy", syy)
                .bind("membership_sigma", msig);
            sec.apply(body);
        } else if (name.rfind("actor", 0) == 0) {
            ActorConfig a;
            a.id = static_cast<int>(s.actors.size()) + 1;
            int r = a.color[0], g = a.color[1], b = a.color[2];
            std::map<int, std::string> visit_text;
            ini::Section sec(name);
            sec.bind("id", a.id)
                .bind("radius_x", a.radius_x)
                .bind("radius_y", a.radius_y)
                .bind("color_r", r)
                .bind("color_g", g)
                .bind("color_b", b)
                .bind("color_noise", a.color_noise);
            for (const auto& [key, value] : body) {
                if (key.rfind("visit", 0) == 0) {
                    int n = 0;
                    const auto* end = key.data() + key.size();
                    const auto [ptr, ec] = std::from_chars(key.data() + 5, end, n);
                    if (ec == std::errc{} && ptr == end) {
                        sec.bind(key, visit_text[n]);
                    }
                }
            }
            sec.apply(body);
            for (int c : {r, g, b}) {
                if (c < 0 || c > 255) {
                    invalid(fmt::format("[{}] colour channels must lie in 0..255", name));
                }
            }
            a.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
            for (const auto& [n, text] : visit_text) {
                std::istringstream fields(text);
                Visit v;
                double x = 0, y = 0;
                if (!(fields >> v.entry_frame >> v.exit_frame >> v.speed)) {
                    invalid(fmt::format("[{}] visit{} needs 'entry exit speed x1 y1 ...'", name, n));
                }
                while (fields >> x >> y) {
                    v.waypoints.emplace_back(x, y);
                }
                if (!fields.eof()) {
                    invalid(fmt::format("[{}] visit{} has a malformed waypoint list", name, n));
                }
                a.visits.push_back(std::move(v));
            }
            s.actors.push_back(std::move(a));
        } else {
            invalid(fmt::format("{}: unknown section [{}]", origin, name));
        }
    }
    if (seed_long < 0) {
        invalid("seed must be nonnegative");
    }
    s.seed = static_cast<std::uint64_t>(seed_long);
    s.ground_min = Vec2(gmin_x, gmin_y);
    s.ground_max = Vec2(gmax_x, gmax_y);
    if (have_region) {
        s.red_region.mu = Vec2(mu_x, mu_y);
        s.red_region.sigma << sxx, sxy, sxy, syy;
        s.red_region.membership_sigma = msig;
    } else {
        s.red_region.mu = s.homography().ground_to_pixel(door());
        s.red_region.sigma = Vec2(30.0 * 30.0, 40.0 * 40.0).asDiagonal();
    }
    s.validate();
    return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, fmt::format("cannot open scenario '{}'", path.string()));
    }
    return parse_scenario(in, path.string());
}

std::string format_scenario(const ScenarioConfig& s) {
    std::string out = "[scenario]\n";
    auto line = [&out](std::string_view key, auto value) { out += fmt::format("{} = {}\n", key, value); };
    line("name", s.name);
    line("frames", s.frames);
    line("width", s.width);
    line("height", s.height);
    line("fps", s.fps);
    line("seed", s.seed);
    line("ground_min_x", s.ground_min.x());
    line("ground_min_y", s.ground_min.y());
    line("ground_max_x", s.ground_max.x());
    line("ground_max_y", s.ground_max.y());
    out += "\n[calibration]\n";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& c = s.calibration[i];
        line(fmt::format("p{}_px", i + 1), c.pixel.x());
        line(fmt::format("p{}_py", i + 1), c.pixel.y());
        line(fmt::format("p{}_gx", i + 1), c.ground.x());
        line(fmt::format("p{}_gy", i + 1), c.ground.y());
    }
    out += "\n[red_region]\n";
    line("mu_x", s.red_region.mu.x());
    line("mu_y", s.red_region.mu.y());
    line("sigma_xx", s.red_region.sigma(0, 0));
    line("sigma_xy", s.red_region.sigma(0, 1));
    line("sigma_yy", s.red_region.sigma(1, 1));
    line("membership_sigma", s.red_region.membership_sigma);
    for (std::size_t i = 0; i < s.actors.size(); ++i) {
        const auto& a = s.actors[i];
        out += fmt::format("\n[actor{}]\n", i + 1);
        line("id", a.id);
        line("radius_x", a.radius_x);
        line("radius_y", a.radius_y);
        line("color_r", int{a.color[0]});
        line("color_g", int{a.color[1]});
        line("color_b", int{a.color[2]});
        line("color_noise", a.color_noise);
        for (std::size_t k = 0; k < a.visits.size(); ++k) {
            const auto& v = a.visits[k];
            std::string text = fmt::format("{} {} {}", v.entry_frame, v.exit_frame, v.speed);
            for (const auto& w : v.waypoints) {
                text += fmt::format(" {} {}", w.x(), w.y());
            }
            line(fmt::format("visit{}", k + 1), text);
        }
    }
    return out;
}

}  // namespace crowdtrack
