#pragma once

#include "tsplat/config.hpp"
#include "tsplat/image.hpp"
#include "tsplat/mixture.hpp"
#include "tsplat/renderer.hpp"
#include "tsplat/tmath.hpp"

#include <span>
#include <vector>

namespace tsplat {

/// Gradients for one component, laid out like its raw parameters.
struct ComponentGrad {
    Vec3 position = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();
    std::vector<Vec3> sh;
    double raw_opacity = 0.0;
    double raw_nu = 0.0;

    void set_zero();
    ComponentGrad& operator+=(const ComponentGrad& other);
};

struct ParamGrads {
    std::vector<ComponentGrad> components;

    static ParamGrads zeros_like(const Mixture& mixture);
    std::size_t size() const { return components.size(); }
    ComponentGrad& operator[](std::size_t i) { return components[i]; }
    const ComponentGrad& operator[](std::size_t i) const { return components[i]; }
    ParamGrads& operator+=(const ParamGrads& other);
};

/// dT/dh for T = [1 + h/nu]^(-(nu+2)/2).
double dT2D_dh(double h, double nu);

/// dT/dnu. kFull differentiates the exponent too; kPaper keeps only the base term.
double dT2D_dnu(double h, double nu, NuGradient mode = NuGradient::kFull);

struct CompositeGrad {
    Vec3 d_color = Vec3::Zero();
    double d_opacity = 0.0;
    double d_density = 0.0;
};

/// Reverse-mode derivative of composite_pixel. Entries past forward.count get zero gradient.
/// Throws if forward.count exceeds the entry list.
std::vector<CompositeGrad> composite_backward(const Vec3& pixel_grad,
                                              std::span<const CompositeEntry> ordered,
                                              const Vec3& background, const CompositeResult& forward);

struct ProjectionGrad {
    Vec3 d_position = Vec3::Zero();
    Vec3 d_log_scale = Vec3::Zero();
    Vec4 d_rotation = Vec4::Zero();
};

/// Chain rule from (mean2d, cov2d) back to position, log-scale and raw quaternion.
/// The quaternion gradient is tangent to the unit sphere at the stored rotation.
ProjectionGrad projection_backward(const Projected2D& proj, const Vec2& d_mean2d,
                                   const Mat2& d_cov2d, const TComponent& component,
                                   const Camera& camera);

/// Gradient of sum_pixels <d_image, rgb> with respect to every raw parameter.
/// `d_image` is taken with respect to the unclamped frame (`FrameBuffer::raw_rgb`).
ParamGrads render_backward(const Mixture& mixture, const Camera& camera, const Image& d_image,
                           const FrameBuffer& forward, const RenderSettings& settings,
                           NuGradient nu_mode = NuGradient::kFull);

}  // namespace tsplat
