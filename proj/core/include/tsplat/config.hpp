#pragma once

#include <cstdint>
#include <string>

namespace tsplat {

enum class NuGradient {
    kFull,   // includes the derivative of the exponent
    kPaper,  // the truncated form without the -1/2 ln(1 + h/nu) term, kept for ablation
};

enum class BurnInNoise {
    kCovarianceFactor,  // noise ~ N(0, var * Sigma), drawn as L z with L L^T = Sigma
    kCovarianceProduct, // noise = Sigma z (covariance Sigma^2)
};

enum class PositionGradient {
    kRaw,       // dL/dmu as produced by the backward pass
    kAdaptive,  // Adam-normalized dL/dmu
};

struct RenderSettings {
    int tile_size = 16;
    /// Density level at which a splat is truncated.
    double tau = 1.0 / 255.0;
    /// Components whose cutoff radius is below this are skipped.
    double min_radius_px = 0.3;
    bool early_stop = true;
    double transmittance_floor = 1e-4;
    /// SH degree used for evaluation; -1 means "all stored coefficients".
    int active_sh_degree = -1;
    /// Worker count; 0 means TSPLAT_THREADS or hardware concurrency.
    int threads = 0;
};

struct LossWeights {
    double dssim = 0.2;
    double opacity = 0.01;
    double sigma = 0.01;
    /// Divide both regularizer sums by the component count, so the weights act per
    /// component and keep their meaning as the mixture grows or shrinks.
    bool per_component_mean = true;
};

struct LearningRates {
    /// Position step epsilon at iteration 0 and at max_iterations, before extent scaling.
    double position_eps_init = 0.0126;
    double position_eps_final = 0.00126;
    double log_scale = 0.005;
    double rotation = 0.001;
    double raw_opacity = 0.05;
    double raw_nu = 0.05;
    double sh_dc = 0.0025;
    double sh_rest = 0.0025 / 20.0;
};

struct TrainConfig {
    LearningRates lr;
    LossWeights loss;

    double friction = 0.1;
    double gate_k = 100.0;
    double gate_t = 0.005;
    /// Fraction of iterations spent in burn-in (no friction term, Sigma-shaped noise).
    double burn_in_fraction = 0.5;
    bool noise_is_variance = true;
    bool enable_noise = true;
    BurnInNoise burn_in_noise = BurnInNoise::kCovarianceFactor;
    PositionGradient position_gradient = PositionGradient::kAdaptive;
    NuGradient nu_gradient = NuGradient::kFull;

    int max_iterations = 30000;
    int relocation_interval = 100;  // 0 disables recycling
    double relocation_cap = 0.05;
    double dead_threshold = 0.005;
    double add_fraction = 0.05;
    int max_components = 1000000;

    int max_sh_degree = 3;
    int sh_warmup_interval = 1000;

    double nu_init = 50.0;
    double opacity_init = 0.1;
    bool freeze_nu = false;
    bool positive_only = false;

    int log_interval = 100;
    int checkpoint_interval = 0;  // 0 disables periodic checkpoints

    RenderSettings render;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when a rate, cap or threshold is out of range.
void validate_config(const TrainConfig& config);

}  // namespace tsplat
