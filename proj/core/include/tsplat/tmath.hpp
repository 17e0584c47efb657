#pragma once

#include "tsplat/mixture.hpp"

#include <optional>
#include <span>
#include <utility>

namespace tsplat {

/// Image-plane footprint of one component.
struct Projected2D {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Identity();
    double depth = 0.0;
    double nu = kMaxNu;
    double cutoff_radius_px = 0.0;

    // Cached for the backward pass.
    Vec3 cam_mean = Vec3::Zero();
    Mat23 jacobian = Mat23::Zero();
};

/// Unnormalized kernel [1 + h/nu]^(-(nu + dim)/2) for a Mahalanobis value h.
double t_kernel(double h, double nu, int dim);

/// Unnormalized 3D Student's t density. Throws on a singular covariance.
double density3d(const Vec3& x, const Vec3& mu, const Mat3& sigma, double nu);

/// EWA-style projection through the perspective Jacobian at the camera-space mean.
/// Returns nullopt when the mean is not in front of z_near.
std::optional<Projected2D> project_component(const TComponent& component, const Camera& camera,
                                             double tau = 1.0 / 255.0);

/// Projection with an explicit covariance; the component overload forwards here.
std::optional<Projected2D> project_mean_cov(const Vec3& mu, const Mat3& sigma, double nu,
                                            const Camera& camera, double tau);

double mahalanobis2d(const Vec2& u, const Vec2& mean, const Mat2& cov);

/// 2D density [1 + h/nu]^(-(nu + 2)/2). Throws on a singular cov2d.
double density2d(const Vec2& u, const Projected2D& proj);

/// Squared Mahalanobis distance at which the 2D density equals tau.
double cutoff_mahalanobis_sq(double nu, double tau);

/// Pixel radius of the tau level set: sqrt(cutoff_mahalanobis_sq) * sqrt(lambda_max(cov2d)).
double cutoff_radius(double nu, const Mat2& cov2d, double tau);

/// Largest eigenvalue of a symmetric 2x2 matrix.
double max_eigenvalue2(const Mat2& m);

/// Squared signed mixture (sum w_i d_i)^2 and its pairwise expansion; reference only.
std::pair<double, double> squared_mixture_eval(std::span<const double> weights,
                                               std::span<const double> densities);

}  // namespace tsplat
