#include "tsplat/sghmc.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace tsplat {

namespace {

ComponentGrad zero_like(const TComponent& c) {
    ComponentGrad g;
    g.sh.assign(c.sh.size(), Vec3::Zero());
    return g;
}

}  // namespace

SamplerState SamplerState::create(const Mixture& mixture, const TrainConfig& config) {
    SamplerState s;
    s.friction = config.friction;
    s.burn_in_until =
        static_cast<std::int64_t>(std::llround(config.burn_in_fraction * config.max_iterations));
    s.rng.seed(config.seed);
    s.epsilon = lr_schedule(0, config);
    s.resize_for(mixture);
    return s;
}

void SamplerState::resize_for(const Mixture& mixture) {
    const std::size_t n = mixture.size();
    const std::size_t old = momentum.size();
    momentum.resize(n, Vec3::Zero());
    adam_m.resize(n);
    adam_v.resize(n);
    for (std::size_t i = old; i < n; ++i) {
        adam_m[i] = zero_like(mixture.components[i]);
        adam_v[i] = zero_like(mixture.components[i]);
    }
}

void SamplerState::reset_component(std::size_t i) {
    momentum.at(i).setZero();
    adam_m.at(i).set_zero();
    adam_v.at(i).set_zero();
}

double gate(double opacity, double k, double t_gate) {
    const double z = -k * (std::abs(opacity) - t_gate);
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double lr_schedule(std::int64_t iteration, const TrainConfig& config, double extent) {
    const double e0 = config.lr.position_eps_init;
    const double ef = config.lr.position_eps_final;
    double frac = 1.0;
    if (config.max_iterations > 0) {
        frac = std::clamp(static_cast<double>(iteration) / config.max_iterations, 0.0, 1.0);
    }
    return e0 * std::pow(ef / e0, frac) * std::sqrt(extent);
}

PositionNoise PositionNoise::zeros(std::size_t n) {
    return {std::vector<Vec3>(n, Vec3::Zero()), std::vector<Vec3>(n, Vec3::Zero())};
}

PositionNoise PositionNoise::draw(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> normal;
    PositionNoise out = zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int d = 0; d < 3; ++d) out.position[i][d] = normal(rng);
        for (int d = 0; d < 3; ++d) out.momentum[i][d] = normal(rng);
    }
    return out;
}

Vec3 position_noise(const Vec3& z, const Mat3& sigma, double std_dev, bool burn_in,
                    BurnInNoise mode) {
    if (!burn_in) {
        return std_dev * z;
    }
    if (mode == BurnInNoise::kCovarianceProduct) {
        return std_dev * (sigma * z);
    }
    Eigen::LLT<Mat3> llt(sigma);
    if (llt.info() != Eigen::Success) {
        return std_dev * (sigma * z);
    }
    const Mat3 l = llt.matrixL();
    return std_dev * (l * z);
}

void sghmc_step_positions(Mixture& mixture, SamplerState& state, std::span<const Vec3> grads,
                          const TrainConfig& config, const PositionNoise& noise) {
    const std::size_t n = mixture.size();
    if (grads.size() != n || noise.position.size() != n || noise.momentum.size() != n ||
        state.momentum.size() != n) {
        throw std::invalid_argument("sghmc_step_positions: size mismatch");
    }
    const double eps = state.epsilon;
    const double c = state.friction;
    const bool burn_in = state.in_burn_in();
    const double pos_var = 2.0 * std::pow(eps, 1.5) * c;
    const double mom_var = 2.0 * eps * c;
    const double pos_std = config.noise_is_variance ? std::sqrt(pos_var) : pos_var;
    const double mom_std = config.noise_is_variance ? std::sqrt(mom_var) : mom_var;

    for (std::size_t i = 0; i < n; ++i) {
        auto& comp = mixture.components[i];
        const double g8 = gate(opacity_of(comp.raw_opacity), config.gate_k, config.gate_t);
        const Vec3& g = grads[i];
        Vec3& r = state.momentum[i];

        Vec3 step = -eps * eps * g;
        if (!burn_in) {
            step += g8 * eps * (1.0 - eps * c) * r;
        }
        if (g8 != 0.0 && !noise.position[i].isZero(0.0)) {
            const Mat3 sigma = burn_in ? covariance_of(comp) : Mat3::Identity();
            step += g8 * position_noise(noise.position[i], sigma, pos_std, burn_in,
                                        config.burn_in_noise);
        }
        comp.position += step;
        r = r - eps * g - eps * c * r + mom_std * noise.momentum[i];
    }
}

void sghmc_step_positions(Mixture& mixture, SamplerState& state, std::span<const Vec3> grads,
                          const TrainConfig& config) {
    const PositionNoise noise = config.enable_noise ? PositionNoise::draw(state.rng, mixture.size())
                                                    : PositionNoise::zeros(mixture.size());
    sghmc_step_positions(mixture, state, grads, config, noise);
}

namespace {

struct AdamCoeffs {
    double b1_corr;
    double b2_corr;
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, const AdamCoeffs& k) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
    const T m_hat = m / k.b1_corr;
    const T v_hat = v / k.b2_corr;
    param -= lr * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + kAdamEps).matrix());
}

void adam_update_scalar(double& param, double grad, double& m, double& v, double lr,
                        const AdamCoeffs& k) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad * grad;
    param -= lr * (m / k.b1_corr) / (std::sqrt(v / k.b2_corr) + kAdamEps);
}

}  // namespace

std::vector<Vec3> adaptive_position_gradients(SamplerState& state, const ParamGrads& grads) {
    const std::size_t n = grads.size();
    if (state.adam_m.size() != n) {
        throw std::invalid_argument("adaptive_position_gradients: size mismatch");
    }
    const double t = static_cast<double>(state.adam_steps + 1);
    const AdamCoeffs k{1.0 - std::pow(kAdamBeta1, t), 1.0 - std::pow(kAdamBeta2, t)};
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 dir = Vec3::Zero();
        // a unit learning rate turns the update into the normalized direction
        adam_update(dir, grads[i].position, state.adam_m[i].position, state.adam_v[i].position, -1.0, k);
        out[i] = dir;
    }
    return out;
}

void adam_step(Mixture& mixture, SamplerState& state, const ParamGrads& grads,
               const TrainConfig& config) {
    const std::size_t n = mixture.size();
    if (grads.size() != n || state.adam_m.size() != n) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    const double t = static_cast<double>(++state.adam_steps);
    const AdamCoeffs k{1.0 - std::pow(kAdamBeta1, t), 1.0 - std::pow(kAdamBeta2, t)};
    const auto& lr = config.lr;
    for (std::size_t i = 0; i < n; ++i) {
        auto& comp = mixture.components[i];
        const auto& g = grads[i];
        auto& m = state.adam_m[i];
        auto& v = state.adam_v[i];
        adam_update(comp.log_scale, g.log_scale, m.log_scale, v.log_scale, lr.log_scale, k);
        adam_update(comp.rotation, g.rotation, m.rotation, v.rotation, lr.rotation, k);
        for (std::size_t j = 0; j < comp.sh.size(); ++j) {
            adam_update(comp.sh[j], g.sh[j], m.sh[j], v.sh[j], j == 0 ? lr.sh_dc : lr.sh_rest, k);
        }
        adam_update_scalar(comp.raw_opacity, g.raw_opacity, m.raw_opacity, v.raw_opacity,
                           lr.raw_opacity, k);
        if (config.positive_only && comp.raw_opacity < 0.0) {
            comp.raw_opacity = 0.0;
        }
        if (!config.freeze_nu) {
            adam_update_scalar(comp.raw_nu, g.raw_nu, m.raw_nu, v.raw_nu, lr.raw_nu, k);
        }
        comp.rotation = normalized_quaternion(comp.rotation);
    }
}

}  // namespace tsplat
