#pragma once

#include "tsplat/mixture.hpp"

#include <array>
#include <span>

namespace tsplat {

inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr int kMaxShCoeffs = 16;

/// Real SH basis values Y_k(dir) for k < (degree+1)^2.
std::array<double, kMaxShCoeffs> sh_basis(const Vec3& dir, int degree);

/// Gradient of every basis polynomial with respect to the components of `dir`, taken as given
/// (the caller chains through any normalization).
std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(const Vec3& dir, int degree);

/// max(0, sum_k Y_k(dir) c_k + 0.5) per channel. Throws when degree exceeds the stored coefficients.
Vec3 sh_to_color(std::span<const Vec3> coeffs, const Vec3& view_dir, int degree);

/// Degree-0 coefficient reproducing `rgb` through sh_to_color.
Vec3 rgb_to_sh_dc(const Vec3& rgb);

}  // namespace tsplat
