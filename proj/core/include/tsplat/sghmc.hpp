#pragma once

#include "tsplat/config.hpp"
#include "tsplat/gradients.hpp"
#include "tsplat/mixture.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tsplat {

/// Optimizer state: SGHMC momentum for positions and Adam moments for everything else.
/// The position slot of the Adam moments backs PositionGradient::kAdaptive.
struct SamplerState {
    std::vector<Vec3> momentum;
    std::vector<ComponentGrad> adam_m;
    std::vector<ComponentGrad> adam_v;
    std::int64_t iteration = 0;
    std::int64_t adam_steps = 0;
    double epsilon = 0.0;
    double friction = 0.0;
    std::int64_t burn_in_until = 0;
    std::mt19937_64 rng;

    static SamplerState create(const Mixture& mixture, const TrainConfig& config);

    /// Grows or shrinks the per-component arrays to match `mixture`; new entries are zero.
    void resize_for(const Mixture& mixture);

    /// Zeroes momentum and moments of one component.
    void reset_component(std::size_t i);

    bool in_burn_in() const { return iteration < burn_in_until; }
};

/// sigmoid(-k (|o| - t)).
double gate(double opacity, double k, double t_gate);

/// eps0 * (eps_final / eps0)^(i / I_max), scaled by sqrt(extent).
double lr_schedule(std::int64_t iteration, const TrainConfig& config, double extent = 1.0);

/// Standard normal draws consumed by one position step.
struct PositionNoise {
    std::vector<Vec3> position;
    std::vector<Vec3> momentum;

    static PositionNoise zeros(std::size_t n);
    static PositionNoise draw(std::mt19937_64& rng, std::size_t n);
};

/// Noise vector added to a position for component covariance `sigma` and standard draw `z`.
/// Outside burn-in this is std * z; during burn-in it is shaped by sigma.
Vec3 position_noise(const Vec3& z, const Mat3& sigma, double std_dev, bool burn_in,
                    BurnInNoise mode);

/// Gated SGHMC update of every position and momentum from explicit standard normal draws.
/// `grads[i]` is the position gradient fed to the sampler.
void sghmc_step_positions(Mixture& mixture, SamplerState& state, std::span<const Vec3> grads,
                          const TrainConfig& config, const PositionNoise& noise);

/// Same, drawing noise from state.rng (zeros when config.enable_noise is false).
void sghmc_step_positions(Mixture& mixture, SamplerState& state, std::span<const Vec3> grads,
                          const TrainConfig& config);

/// Adam-normalized position gradients; updates the position moments in `state`.
std::vector<Vec3> adaptive_position_gradients(SamplerState& state, const ParamGrads& grads);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-15;

/// Bias-corrected Adam for log-scale, rotation, SH, raw opacity and raw nu.
/// Renormalizes quaternions afterwards.
void adam_step(Mixture& mixture, SamplerState& state, const ParamGrads& grads,
               const TrainConfig& config);

}  // namespace tsplat
