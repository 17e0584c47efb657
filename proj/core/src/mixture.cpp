#include "tsplat/mixture.hpp"
#include "tsplat/config.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsplat {

void validate_camera(const Camera& camera) {
    if (camera.width <= 0 || camera.height <= 0) {
        throw std::invalid_argument("camera: width and height must be positive");
    }
    if (!(camera.fx > 0.0) || !(camera.fy > 0.0)) {
        throw std::invalid_argument("camera: focal lengths must be positive");
    }
    if (!(camera.z_near > 0.0)) {
        throw std::invalid_argument("camera: z_near must be positive");
    }
    const Mat3 gram = camera.rotation_wc * camera.rotation_wc.transpose();
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
        throw std::invalid_argument("camera: rotation_wc is not orthonormal");
    }
}

void validate_mixture(const Mixture& mixture) {
    if (mixture.sh_degree < 0 || mixture.sh_degree > 3) {
        throw std::invalid_argument("mixture: sh_degree must be in [0, 3]");
    }
    const auto expected = static_cast<std::size_t>(sh_coeff_count(mixture.sh_degree));
    for (std::size_t i = 0; i < mixture.components.size(); ++i) {
        if (mixture.components[i].sh.size() != expected) {
            throw std::invalid_argument("mixture: component " + std::to_string(i) +
                                        " has " + std::to_string(mixture.components[i].sh.size()) +
                                        " SH coefficients, expected " + std::to_string(expected));
        }
    }
}

void validate_config(const TrainConfig& config) {
    const auto& lr = config.lr;
    const bool rates_ok = lr.position_eps_init > 0 && lr.position_eps_final > 0 && lr.log_scale > 0 &&
                          lr.rotation > 0 && lr.raw_opacity > 0 && lr.raw_nu > 0 && lr.sh_dc > 0 &&
                          lr.sh_rest > 0;
    if (!rates_ok) {
        throw std::invalid_argument("config: all learning rates must be positive");
    }
    if (!(config.relocation_cap > 0.0 && config.relocation_cap <= 1.0)) {
        throw std::invalid_argument("config: relocation cap must lie in (0, 1]");
    }
    if (!(config.render.tau > 0.0 && config.render.tau < 1.0)) {
        throw std::invalid_argument("config: tau must lie in (0, 1)");
    }
    if (!(config.dead_threshold > 0.0 && config.dead_threshold < 1.0)) {
        throw std::invalid_argument("config: dead threshold must lie in (0, 1)");
    }
    if (config.render.tile_size <= 0) {
        throw std::invalid_argument("config: tile size must be positive");
    }
    if (config.friction < 0.0 || config.max_iterations < 0 || config.max_components < 0) {
        throw std::invalid_argument("config: friction, iterations and component cap must be non-negative");
    }
    if (config.burn_in_fraction < 0.0 || config.burn_in_fraction > 1.0) {
        throw std::invalid_argument("config: burn-in fraction must lie in [0, 1]");
    }
    if (!(config.nu_init >= kMinNu && config.nu_init <= kMaxNu)) {
        throw std::invalid_argument("config: initial nu must lie in [1, 10000]");
    }
    if (config.max_sh_degree < 0 || config.max_sh_degree > 3) {
        throw std::invalid_argument("config: max SH degree must lie in [0, 3]");
    }
}

double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

double nu_of(double raw_nu) { return std::min(1.0 + softplus(raw_nu), kMaxNu); }

double nu_derivative(double raw_nu) {
    if (1.0 + softplus(raw_nu) >= kMaxNu) {
        return 0.0;
    }
    // logistic sigmoid
    if (raw_nu >= 0.0) {
        return 1.0 / (1.0 + std::exp(-raw_nu));
    }
    const double e = std::exp(raw_nu);
    return e / (1.0 + e);
}

double raw_nu_for(double nu) {
    if (!(nu >= kMinNu)) {
        throw std::invalid_argument("raw_nu_for: nu must be >= 1");
    }
    const double y = std::min(nu, kMaxNu) - 1.0;
    if (y <= 0.0) {
        return -50.0;
    }
    if (y > 30.0) {
        return y + std::log(-std::expm1(-y));
    }
    return std::log(std::expm1(y));
}

double opacity_of(double raw_opacity) { return std::tanh(raw_opacity); }

double raw_opacity_for(double opacity) {
    if (!(opacity > -1.0 && opacity < 1.0)) {
        throw std::invalid_argument("raw_opacity_for: opacity must lie in (-1, 1)");
    }
    return std::atanh(opacity);
}

Vec4 normalized_quaternion(const Vec4& raw) {
    const double n = raw.norm();
    if (n == 0.0 || !std::isfinite(n)) {
        return Vec4(1.0, 0.0, 0.0, 0.0);
    }
    return raw / n;
}

Mat3 rotation_matrix(const Vec4& raw_quaternion) {
    const Vec4 q = normalized_quaternion(raw_quaternion);
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Vec3 scale_of(const TComponent& component) { return component.log_scale.array().exp().matrix(); }

Mat3 covariance_of(const TComponent& component) {
    const Mat3 m = rotation_matrix(component.rotation) * scale_of(component).asDiagonal();
    Mat3 sigma = m * m.transpose();
    // exact symmetry for downstream solvers
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    return sigma;
}

Vec3 eigenvalues_of(const Mat3& sigma) {
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw std::invalid_argument("eigenvalues_of: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(sigma, Eigen::EigenvaluesOnly);
    const Vec3 ascending = solver.eigenvalues();
    return Vec3(ascending[2], ascending[1], ascending[0]);
}

}  // namespace tsplat
