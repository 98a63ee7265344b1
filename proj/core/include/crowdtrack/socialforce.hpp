#pragma once

#include "crowdtrack/coords.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace crowdtrack {

/// Social force parameters; defaults are the published values.
struct ForceParams {
    double boundary = 3.0;            ///< b, metres
    double influence_radius = 0.2;    ///< r_i, metres
    double mass = 80.0;               ///< kg
    double attraction = 500.0;        ///< f_a, newtons
    double repulsion = 500.0;         ///< f_r, newtons
    double dt = 1.0 / 25.0;           ///< seconds between frames
    double neighbor_threshold = 3.0;  ///< d-hat, metres
    double noise_position = 0.05;     ///< system noise std per axis, metres
    double noise_velocity = 0.1;      ///< system noise std per axis, m/s
    int max_links = 4;

    void validate() const;
};

struct GroundState {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
};

enum class Behavior : std::uint8_t { Repulsion = 0, Attraction = 1, NonInteraction = 2 };
inline constexpr int kBehaviorCount = 3;

/// One behaviour per neighbour link.
struct InteractionMode {
    std::vector<Behavior> behaviors;
    friend bool operator==(const InteractionMode&, const InteractionMode&) = default;
};

/// Undirected links between targets closer than d-hat, as index pairs (i < j).
[[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> build_links(std::span<const GroundState> states,
                                                                           const ForceParams& params);

/// Neighbours of target `i` (closest first), truncated to params.max_links.
[[nodiscard]] std::vector<std::size_t> neighbors_of(std::size_t i, std::span<const GroundState> states,
                                                    const ForceParams& params);

/// Force of j on i pushing i away from j. Throws CoincidentTargets.
[[nodiscard]] Vec2 repulsive_force(const GroundState& i, const GroundState& j, const ForceParams& params);
/// Force of j on i pulling i toward j. Throws CoincidentTargets.
[[nodiscard]] Vec2 attractive_force(const GroundState& i, const GroundState& j, const ForceParams& params);

/// All 3^n behaviour vectors in lexicographic order. Throws ModeExplosion if
/// 3^n exceeds `cap`.
[[nodiscard]] std::vector<InteractionMode> enumerate_modes(int n_links, int cap = 81);

/// Sum of the per-link forces; NonInteraction links contribute nothing.
[[nodiscard]] Vec2 mode_force(const GroundState& i, std::span<const GroundState> neighbors,
                              const InteractionMode& mode, const ForceParams& params);

/// Newtonian step with additive noise (dx, dy, dvx, dvy).
[[nodiscard]] GroundState predict(const GroundState& state, const Vec2& force, const ForceParams& params,
                                  const Eigen::Vector4d& noise = Eigen::Vector4d::Zero());

using Rng = std::mt19937_64;

/// Particle set of one target for the prediction stage.
struct ParticleBlock {
    std::vector<GroundState> particles;
    Rng* rng = nullptr;
};

/// Propagates each target's particles under every interaction mode with its
/// current neighbours. `estimates` are the targets' point states used for
/// linking and force evaluation; one ParticleBlock per target, updated in place.
/// Output slot t uses mode t % S and parent particle t - t % S plus one noise draw per parent.
void predict_particles(std::span<const GroundState> estimates, std::span<ParticleBlock> blocks,
                       const ForceParams& params);

}  // namespace crowdtrack
