#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace tsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

inline constexpr double kMinNu = 1.0;
inline constexpr double kMaxNu = 10000.0;

/// One signed Student's t component, stored in unconstrained form.
///
/// The rotation quaternion is kept raw (w, x, y, z) and normalized on read.
/// `sh` holds (D+1)^2 RGB coefficient triples for SH degree D.
struct TComponent {
    Vec3 position = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero();
    Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    double raw_nu = 0.0;
    double raw_opacity = 0.0;
    std::vector<Vec3> sh;
};

struct Mixture {
    std::vector<TComponent> components;
    int sh_degree = 0;
    Vec3 background = Vec3::Zero();

    std::size_t size() const { return components.size(); }
    bool empty() const { return components.empty(); }
};

/// Pinhole camera. A world point x maps to camera space as R_wc * x + t_wc.
struct Camera {
    Mat3 rotation_wc = Mat3::Identity();
    Vec3 translation_wc = Vec3::Zero();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    double z_near = 0.01;

    Vec3 center() const { return -rotation_wc.transpose() * translation_wc; }
};

/// Throws std::invalid_argument when the camera breaks its invariants.
void validate_camera(const Camera& camera);

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Throws std::invalid_argument if any component's SH length disagrees with sh_degree.
void validate_mixture(const Mixture& mixture);

// Parameter maps ------------------------------------------------------------

double softplus(double x);

/// nu = min(1 + softplus(raw), 10000).
double nu_of(double raw_nu);

/// d nu / d raw_nu; zero on the clamped branch.
double nu_derivative(double raw_nu);

/// Inverse of nu_of for nu in (1, 10000].
double raw_nu_for(double nu);

double opacity_of(double raw_opacity);
double raw_opacity_for(double opacity);

/// Unit quaternion (w, x, y, z) from raw storage. A zero quaternion maps to identity.
Vec4 normalized_quaternion(const Vec4& raw);

/// Rotation matrix of the normalized quaternion.
Mat3 rotation_matrix(const Vec4& raw_quaternion);

Vec3 scale_of(const TComponent& component);

/// Sigma = R S S^T R^T.
Mat3 covariance_of(const TComponent& component);

/// Real eigenvalues in descending order. Rejects non-symmetric input.
Vec3 eigenvalues_of(const Mat3& sigma);

}  // namespace tsplat
