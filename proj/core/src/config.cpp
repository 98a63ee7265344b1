#include "crowdtrack/config.hpp"

#include "ini.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace crowdtrack {

namespace ini {

Tree read(std::istream& in, const std::string& origin) {
    Tree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigInvalid, fmt::format("{}: line {}: {}", origin, e.line(), e.message()));
    }
    return tree;
}

}  // namespace ini

namespace {

struct RedRegionKeys {
    double mu_x = 0, mu_y = 0, sigma_xx = 1, sigma_xy = 0, sigma_yy = 1, membership_sigma = 2;
};

RedRegion to_region(const RedRegionKeys& k) {
    RedRegion r;
    r.mu = Vec2(k.mu_x, k.mu_y);
    r.sigma << k.sigma_xx, k.sigma_xy, k.sigma_xy, k.sigma_yy;
    r.membership_sigma = k.membership_sigma;
    return r;
}

bool is_region_section(const std::string& name) {
    return name == "red_region" || name.rfind("red_region_", 0) == 0;
}

}  // namespace

void RunConfig::validate() const {
    tracker.validate();
    metrics.validate();
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
    const ini::Tree tree = ini::read(in, origin);
    RunConfig cfg;
    auto& t = cfg.tracker;
    auto& cl = t.clustering;
    auto& sf = t.social_force;
    auto& as = t.association;
    auto& m = cfg.metrics;
    double spatial_xx = as.spatial_covariance(0, 0);
    double spatial_xy = as.spatial_covariance(0, 1);
    double spatial_yy = as.spatial_covariance(1, 1);

    std::map<std::string, ini::Section> sections;
    sections.emplace("tracker", ini::Section("tracker"));
    sections.at("tracker")
        .bind("width", t.width)
        .bind("height", t.height)
        .bind("frames", t.frames)
        .bind("particles", t.particles)
        .bind("downsample_trigger", t.downsample_trigger)
        .bind("downsample_stride", t.downsample_stride)
        .bind("bootstrap_merge_distance", t.bootstrap_merge_distance)
        .bind("arm_distance", t.arm_distance)
        .bind("birth_position_std", t.birth_position_std)
        .bind("birth_velocity_std", t.birth_velocity_std);
    sections.emplace("lifecycle", ini::Section("lifecycle"));
    sections.at("lifecycle")
        .bind("threshold", t.lifecycle.threshold)
        .bind("pixel_constant", t.lifecycle.pixel_constant)
        .bind("distance_constant", t.lifecycle.distance_constant);
    sections.emplace("social_force", ini::Section("social_force"));
    sections.at("social_force")
        .bind("boundary", sf.boundary)
        .bind("influence_radius", sf.influence_radius)
        .bind("mass", sf.mass)
        .bind("attraction", sf.attraction)
        .bind("repulsion", sf.repulsion)
        .bind("dt", sf.dt)
        .bind("neighbor_threshold", sf.neighbor_threshold)
        .bind("noise_position", sf.noise_position)
        .bind("noise_velocity", sf.noise_velocity)
        .bind("max_links", sf.max_links);
    sections.emplace("clustering", ini::Section("clustering"));
    sections.at("clustering")
        .bind("alpha0", cl.alpha0)
        .bind("beta0", cl.beta0)
        .bind("nu0", cl.nu0)
        .bind("l1", cl.l1)
        .bind("l2", cl.l2)
        .bind("shape_angle", cl.shape_angle)
        .bind("neighbors_per_target", cl.neighbors_per_target)
        .bind("neighbor_radius", cl.neighbor_radius)
        .bind("tolerance", cl.tolerance)
        .bind("max_iterations", cl.max_iterations)
        .bind("min_cluster_size", cl.min_cluster_size)
        .bind("bootstrap_grid", cl.bootstrap_grid);
    sections.emplace("association", ini::Section("association"));
    sections.at("association")
        .bind("k_best", as.k_best)
        .bind("occlusion_threshold", as.occlusion_threshold)
        .bind("occlusion_distance", as.occlusion_distance)
        .bind("feature_variance", as.feature_variance)
        .bind("spatial_xx", spatial_xx)
        .bind("spatial_xy", spatial_xy)
        .bind("spatial_yy", spatial_yy)
        .bind("clutter_density", as.clutter_density);
    sections.emplace("metrics", ini::Section("metrics"));
    sections.at("metrics")
        .bind("match_threshold", m.match_threshold)
        .bind("ospamt_cutoff", m.ospamt.cutoff)
        .bind("ospamt_delta", m.ospamt.delta)
        .bind("ospamt_order", m.ospamt.order);

    std::vector<RedRegionKeys> regions;
    for (const auto& [name, body] : tree) {
        if (!body.data().empty()) {
            throw Error(ErrorKind::ConfigInvalid, fmt::format("{}: key '{}' outside any section", origin, name));
        }
        if (is_region_section(name)) {
            RedRegionKeys k;
            ini::Section s(name);
            s.bind("mu_x", k.mu_x)
                .bind("mu_y", k.mu_y)
                .bind("sigma_xx", k.sigma_xx)
                .bind("sigma_xy", k.sigma_xy)
                .bind("sigma_yy", k.sigma_yy)
                .bind("membership_sigma", k.membership_sigma);
            s.apply(body);
            regions.push_back(k);
            continue;
        }
        const auto it = sections.find(name);
        if (it == sections.end()) {
            throw Error(ErrorKind::ConfigInvalid, fmt::format("{}: unknown section [{}]", origin, name));
        }
        it->second.apply(body);
    }
    as.spatial_covariance << spatial_xx, spatial_xy, spatial_xy, spatial_yy;
    for (const auto& k : regions) {
        t.red_regions.push_back(to_region(k));
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, fmt::format("cannot open config '{}'", path.string()));
    }
    return parse_config(in, path.string());
}

std::string format_config(const RunConfig& config) {
    const auto& t = config.tracker;
    const auto& cl = t.clustering;
    const auto& sf = t.social_force;
    const auto& as = t.association;
    const auto& m = config.metrics;
    std::string out;
    auto line = [&out](std::string_view key, auto value) { out += fmt::format("{} = {}\n", key, value); };

    out += "[tracker]\n";
    line("width", t.width);
    line("height", t.height);
    line("frames", t.frames);
    line("particles", t.particles);
    line("downsample_trigger", t.downsample_trigger);
    line("downsample_stride", t.downsample_stride);
    line("bootstrap_merge_distance", t.bootstrap_merge_distance);
    line("arm_distance", t.arm_distance);
    line("birth_position_std", t.birth_position_std);
    line("birth_velocity_std", t.birth_velocity_std);

    out += "\n[lifecycle]\n";
    line("threshold", t.lifecycle.threshold);
    line("pixel_constant", t.lifecycle.pixel_constant);
    line("distance_constant", t.lifecycle.distance_constant);

    for (std::size_t i = 0; i < t.red_regions.size(); ++i) {
        const auto& r = t.red_regions[i];
        out += i == 0 ? "\n[red_region]\n" : fmt::format("\n[red_region_{}]\n", i + 1);
        line("mu_x", r.mu.x());
        line("mu_y", r.mu.y());
        line("sigma_xx", r.sigma(0, 0));
        line("sigma_xy", r.sigma(0, 1));
        line("sigma_yy", r.sigma(1, 1));
        line("membership_sigma", r.membership_sigma);
    }

    out += "\n[social_force]\n";
    line("boundary", sf.boundary);
    line("influence_radius", sf.influence_radius);
    line("mass", sf.mass);
    line("attraction", sf.attraction);
    line("repulsion", sf.repulsion);
    line("dt", sf.dt);
    line("neighbor_threshold", sf.neighbor_threshold);
    line("noise_position", sf.noise_position);
    line("noise_velocity", sf.noise_velocity);
    line("max_links", sf.max_links);

    out += "\n[clustering]\n";
    line("alpha0", cl.alpha0);
    line("beta0", cl.beta0);
    line("nu0", cl.nu0);
    line("l1", cl.l1);
    line("l2", cl.l2);
    line("shape_angle", cl.shape_angle);
    line("neighbors_per_target", cl.neighbors_per_target);
    line("neighbor_radius", cl.neighbor_radius);
    line("tolerance", cl.tolerance);
    line("max_iterations", cl.max_iterations);
    line("min_cluster_size", cl.min_cluster_size);
    line("bootstrap_grid", cl.bootstrap_grid);

    out += "\n[association]\n";
    line("k_best", as.k_best);
    line("occlusion_threshold", as.occlusion_threshold);
    line("occlusion_distance", as.occlusion_distance);
    line("feature_variance", as.feature_variance);
    line("spatial_xx", as.spatial_covariance(0, 0));
    line("spatial_xy", as.spatial_covariance(0, 1));
    line("spatial_yy", as.spatial_covariance(1, 1));
    line("clutter_density", as.clutter_density);

    out += "\n[metrics]\n";
    line("match_threshold", m.match_threshold);
    line("ospamt_cutoff", m.ospamt.cutoff);
    line("ospamt_delta", m.ospamt.delta);
    line("ospamt_order", m.ospamt.order);
    return out;
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
        }
        out << format_config(config);
        if (!out) {
            throw Error(ErrorKind::Io, fmt::format("failed writing '{}'", tmp.string()));
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace crowdtrack
