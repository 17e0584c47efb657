#include "tsplat/tmath.hpp"

#include <Eigen/LU>
#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsplat {

double t_kernel(double h, double nu, int dim) {
    return std::exp(-0.5 * (nu + dim) * std::log1p(h / nu));
}

double density3d(const Vec3& x, const Vec3& mu, const Mat3& sigma, double nu) {
    Eigen::LLT<Mat3> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("density3d: covariance is not positive definite");
    }
    const Vec3 d = x - mu;
    const double h = d.dot(llt.solve(d));
    return t_kernel(h, nu, 3);
}

std::optional<Projected2D> project_mean_cov(const Vec3& mu, const Mat3& sigma, double nu,
                                            const Camera& camera, double tau) {
    const Vec3 p = camera.rotation_wc * mu + camera.translation_wc;
    if (p.z() <= camera.z_near) {
        return std::nullopt;
    }
    const double inv_z = 1.0 / p.z();
    Projected2D out;
    out.cam_mean = p;
    out.depth = p.z();
    out.nu = nu;
    out.mean2d = Vec2(camera.fx * p.x() * inv_z + camera.cx, camera.fy * p.y() * inv_z + camera.cy);
    out.jacobian << camera.fx * inv_z, 0.0, -camera.fx * p.x() * inv_z * inv_z,
        0.0, camera.fy * inv_z, -camera.fy * p.y() * inv_z * inv_z;
    const Mat3 view_cov = camera.rotation_wc * sigma * camera.rotation_wc.transpose();
    Mat2 cov2d = out.jacobian * view_cov * out.jacobian.transpose();
    cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
    out.cov2d = cov2d;
    out.cutoff_radius_px = cutoff_radius(nu, cov2d, tau);
    return out;
}

std::optional<Projected2D> project_component(const TComponent& component, const Camera& camera,
                                             double tau) {
    return project_mean_cov(component.position, covariance_of(component), nu_of(component.raw_nu),
                            camera, tau);
}

double mahalanobis2d(const Vec2& u, const Vec2& mean, const Mat2& cov) {
    const double det = cov.determinant();
    if (!(det > 0.0)) {
        throw std::invalid_argument("density2d: cov2d is singular");
    }
    const Vec2 d = u - mean;
    // adj(cov) / det
    return (cov(1, 1) * d.x() * d.x() - 2.0 * cov(0, 1) * d.x() * d.y() + cov(0, 0) * d.y() * d.y()) /
           det;
}

double density2d(const Vec2& u, const Projected2D& proj) {
    return t_kernel(mahalanobis2d(u, proj.mean2d, proj.cov2d), proj.nu, 2);
}

double cutoff_mahalanobis_sq(double nu, double tau) {
    if (tau >= 1.0) {
        return 0.0;
    }
    return nu * std::expm1(-2.0 * std::log(tau) / (nu + 2.0));
}

double max_eigenvalue2(const Mat2& m) {
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
    return mid + std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));
}

double cutoff_radius(double nu, const Mat2& cov2d, double tau) {
    const double lambda = std::max(0.0, max_eigenvalue2(cov2d));
    return std::sqrt(cutoff_mahalanobis_sq(nu, tau)) * std::sqrt(lambda);
}

std::pair<double, double> squared_mixture_eval(std::span<const double> weights,
                                               std::span<const double> densities) {
    if (weights.size() != densities.size()) {
        throw std::invalid_argument("squared_mixture_eval: length mismatch");
    }
    double linear = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        linear += weights[i] * densities[i];
    }
    double pairwise = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (std::size_t j = 0; j < weights.size(); ++j) {
            pairwise += weights[i] * weights[j] * densities[i] * densities[j];
        }
    }
    return {linear * linear, pairwise};
}

}  // namespace tsplat
