#include "crowdtrack/socialforce.hpp"

#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crowdtrack {

namespace {

constexpr double kCoincident = 1e-9;

/// Unit vector from `from` to `to` and the distance between them.
std::pair<Vec2, double> direction(const Vec2& from, const Vec2& to) {
    const Vec2 d = to - from;
    const double n = d.norm();
    if (n < kCoincident) {
        throw Error(ErrorKind::CoincidentTargets, fmt::format("targets {} m apart", n));
    }
    return {d / n, n};
}

}  // namespace

void ForceParams::validate() const {
    if (!(boundary > 0) || !(influence_radius > 0) || !(mass > 0) || !(attraction > 0) || !(repulsion > 0) ||
        !(dt > 0) || !(neighbor_threshold > 0) || !(noise_position >= 0) || !(noise_velocity >= 0) ||
        max_links < 0) {
        throw Error(ErrorKind::ConfigInvalid, "social force parameters must be positive");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> build_links(std::span<const GroundState> states,
                                                             const ForceParams& params) {
    std::vector<std::pair<std::size_t, std::size_t>> links;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t j = i + 1; j < states.size(); ++j) {
            if ((states[i].position - states[j].position).norm() < params.neighbor_threshold) {
                links.emplace_back(i, j);
            }
        }
    }
    return links;
}

std::vector<std::size_t> neighbors_of(std::size_t i, std::span<const GroundState> states,
                                      const ForceParams& params) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < states.size(); ++j) {
        if (j == i) {
            continue;
        }
        const double d = (states[i].position - states[j].position).norm();
        if (d < params.neighbor_threshold) {
            near.emplace_back(d, j);
        }
    }
    std::sort(near.begin(), near.end());
    if (near.size() > static_cast<std::size_t>(params.max_links)) {
        near.resize(static_cast<std::size_t>(params.max_links));
    }
    std::vector<std::size_t> out;
    out.reserve(near.size());
    for (const auto& [d, j] : near) {
        out.push_back(j);
    }
    return out;
}

Vec2 repulsive_force(const GroundState& i, const GroundState& j, const ForceParams& params) {
    const auto [u_ji, d] = direction(j.position, i.position);
    const double r_ij = 2.0 * params.influence_radius;
    return params.repulsion * std::exp((r_ij - d) / params.boundary) * u_ji;
}

Vec2 attractive_force(const GroundState& i, const GroundState& j, const ForceParams& params) {
    const auto [u_ij, d] = direction(i.position, j.position);
    const double r_ij = 2.0 * params.influence_radius;
    return params.attraction * std::exp(-(r_ij - d) / params.boundary) * u_ij;
}

std::vector<InteractionMode> enumerate_modes(int n_links, int cap) {
    if (n_links < 0) {
        throw Error(ErrorKind::ConfigInvalid, "negative link count");
    }
    long long count = 1;
    for (int l = 0; l < n_links; ++l) {
        count *= kBehaviorCount;
        if (count > cap) {
            throw Error(ErrorKind::ModeExplosion,
                        fmt::format("3^{} interaction modes exceed the cap of {}", n_links, cap));
        }
    }
    std::vector<InteractionMode> modes(static_cast<std::size_t>(count));
    for (long long s = 0; s < count; ++s) {
        auto& behaviors = modes[static_cast<std::size_t>(s)].behaviors;
        behaviors.resize(static_cast<std::size_t>(n_links));
        long long rem = s;
        for (int l = n_links - 1; l >= 0; --l) {
            behaviors[static_cast<std::size_t>(l)] = static_cast<Behavior>(rem % kBehaviorCount);
            rem /= kBehaviorCount;
        }
    }
    return modes;
}

Vec2 mode_force(const GroundState& i, std::span<const GroundState> neighbors, const InteractionMode& mode,
                const ForceParams& params) {
    if (mode.behaviors.size() != neighbors.size()) {
        throw Error(ErrorKind::DimensionMismatch, "interaction mode length differs from neighbour count");
    }
    Vec2 total = Vec2::Zero();
    for (std::size_t l = 0; l < neighbors.size(); ++l) {
        switch (mode.behaviors[l]) {
        case Behavior::Repulsion: total += repulsive_force(i, neighbors[l], params); break;
        case Behavior::Attraction: total += attractive_force(i, neighbors[l], params); break;
        case Behavior::NonInteraction: break;
        }
    }
    return total;
}

GroundState predict(const GroundState& state, const Vec2& force, const ForceParams& params,
                    const Eigen::Vector4d& noise) {
    const Vec2 accel = force / params.mass;
    GroundState out;
    out.position = state.position + state.velocity * params.dt + 0.5 * accel * params.dt * params.dt +
                   noise.head<2>();
    out.velocity = state.velocity + accel * params.dt + noise.tail<2>();
    return out;
}

void predict_particles(std::span<const GroundState> estimates, std::span<ParticleBlock> blocks,
                       const ForceParams& params) {
    if (estimates.size() != blocks.size()) {
        throw Error(ErrorKind::DimensionMismatch, "one particle block per target required");
    }
    const int cap = static_cast<int>(std::lround(std::pow(kBehaviorCount, std::max(0, params.max_links))));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto& block = blocks[i];
        if (block.particles.empty()) {
            continue;
        }
        if (block.rng == nullptr) {
            throw Error(ErrorKind::ConfigInvalid, "particle block has no random stream");
        }
        const auto neighbor_idx = neighbors_of(i, estimates, params);
        std::vector<GroundState> neighbors;
        neighbors.reserve(neighbor_idx.size());
        for (auto j : neighbor_idx) {
            neighbors.push_back(estimates[j]);
        }
        const auto modes = enumerate_modes(static_cast<int>(neighbors.size()), cap);
        std::vector<Vec2> forces;
        forces.reserve(modes.size());
        for (const auto& mode : modes) {
            forces.push_back(mode_force(estimates[i], neighbors, mode, params));
        }

        std::normal_distribution<double> pos_noise(0.0, params.noise_position);
        std::normal_distribution<double> vel_noise(0.0, params.noise_velocity);
        const std::size_t n = block.particles.size();
        const std::size_t s_count = modes.size();
        std::vector<GroundState> out(n);
        for (std::size_t parent = 0; parent < n; parent += s_count) {
            Eigen::Vector4d xi;
            xi << pos_noise(*block.rng), pos_noise(*block.rng), vel_noise(*block.rng), vel_noise(*block.rng);
            GroundState noisy = block.particles[parent];
            noisy.position += xi.head<2>();
            noisy.velocity += xi.tail<2>();
            for (std::size_t m = 0; m < s_count && parent + m < n; ++m) {
                out[parent + m] = predict(noisy, forces[m], params);
            }
        }
        block.particles = std::move(out);
    }
}

}  // namespace crowdtrack
