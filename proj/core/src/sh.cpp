#include "tsplat/sh.hpp"

#include <stdexcept>

namespace tsplat {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

}  // namespace

std::array<double, kMaxShCoeffs> sh_basis(const Vec3& dir, int degree) {
    std::array<double, kMaxShCoeffs> y{};
    y[0] = kShC0;
    if (degree < 1) {
        return y;
    }
    const double x = dir.x(), yy = dir.y(), z = dir.z();
    y[1] = -kC1 * yy;
    y[2] = kC1 * z;
    y[3] = -kC1 * x;
    if (degree < 2) {
        return y;
    }
    const double xx = x * x, y2 = yy * yy, zz = z * z;
    y[4] = kC2[0] * x * yy;
    y[5] = kC2[1] * yy * z;
    y[6] = kC2[2] * (2.0 * zz - xx - y2);
    y[7] = kC2[3] * x * z;
    y[8] = kC2[4] * (xx - y2);
    if (degree < 3) {
        return y;
    }
    y[9] = kC3[0] * yy * (3.0 * xx - y2);
    y[10] = kC3[1] * x * yy * z;
    y[11] = kC3[2] * yy * (4.0 * zz - xx - y2);
    y[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * y2);
    y[13] = kC3[4] * x * (4.0 * zz - xx - y2);
    y[14] = kC3[5] * z * (xx - y2);
    y[15] = kC3[6] * x * (xx - 3.0 * y2);
    return y;
}

std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(const Vec3& dir, int degree) {
    std::array<Vec3, kMaxShCoeffs> g;
    g.fill(Vec3::Zero());
    if (degree < 1) {
        return g;
    }
    const double x = dir.x(), y = dir.y(), z = dir.z();
    g[1] = Vec3(0.0, -kC1, 0.0);
    g[2] = Vec3(0.0, 0.0, kC1);
    g[3] = Vec3(-kC1, 0.0, 0.0);
    if (degree < 2) {
        return g;
    }
    const double xx = x * x, yy = y * y, zz = z * z;
    g[4] = kC2[0] * Vec3(y, x, 0.0);
    g[5] = kC2[1] * Vec3(0.0, z, y);
    g[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
    g[7] = kC2[3] * Vec3(z, 0.0, x);
    g[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
    if (degree < 3) {
        return g;
    }
    g[9] = kC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
    g[10] = kC3[1] * Vec3(y * z, x * z, x * y);
    g[11] = kC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
    g[12] = kC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
    g[13] = kC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
    g[14] = kC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
    g[15] = kC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
    return g;
}

Vec3 sh_to_color(std::span<const Vec3> coeffs, const Vec3& view_dir, int degree) {
    if (degree < 0 || degree > 3 || static_cast<int>(coeffs.size()) < sh_coeff_count(degree)) {
        throw std::invalid_argument("sh_to_color: degree exceeds stored coefficients");
    }
    const auto basis = sh_basis(view_dir, degree);
    Vec3 c = Vec3::Constant(0.5);
    for (int k = 0; k < sh_coeff_count(degree); ++k) {
        c += basis[k] * coeffs[k];
    }
    return c.cwiseMax(0.0);
}

Vec3 rgb_to_sh_dc(const Vec3& rgb) { return (rgb - Vec3::Constant(0.5)) / kShC0; }

}  // namespace tsplat
