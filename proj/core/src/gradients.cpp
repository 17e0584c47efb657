#include "tsplat/gradients.hpp"

#include "tsplat/parallel.hpp"
#include "tsplat/sh.hpp"

#include <cmath>
#include <stdexcept>

namespace tsplat {

void ComponentGrad::set_zero() {
    position.setZero();
    log_scale.setZero();
    rotation.setZero();
    for (auto& c : sh) c.setZero();
    raw_opacity = 0.0;
    raw_nu = 0.0;
}

ComponentGrad& ComponentGrad::operator+=(const ComponentGrad& other) {
    position += other.position;
    log_scale += other.log_scale;
    rotation += other.rotation;
    if (sh.size() != other.sh.size()) {
        throw std::invalid_argument("ComponentGrad: SH length mismatch");
    }
    for (std::size_t k = 0; k < sh.size(); ++k) sh[k] += other.sh[k];
    raw_opacity += other.raw_opacity;
    raw_nu += other.raw_nu;
    return *this;
}

ParamGrads ParamGrads::zeros_like(const Mixture& mixture) {
    ParamGrads g;
    g.components.resize(mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        g.components[i].sh.assign(mixture.components[i].sh.size(), Vec3::Zero());
    }
    return g;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
    if (other.size() != size()) {
        throw std::invalid_argument("ParamGrads: size mismatch");
    }
    for (std::size_t i = 0; i < size(); ++i) components[i] += other.components[i];
    return *this;
}

double dT2D_dh(double h, double nu) {
    return -(nu + 2.0) / (2.0 * nu) * std::exp(-0.5 * (nu + 4.0) * std::log1p(h / nu));
}

double dT2D_dnu(double h, double nu, NuGradient mode) {
    const double g = 1.0 + h / nu;
    const double t = std::exp(-0.5 * (nu + 2.0) * std::log1p(h / nu));
    const double base = (nu + 2.0) * h / (2.0 * nu * nu * g);
    if (mode == NuGradient::kPaper) {
        return t * base;
    }
    return t * (base - 0.5 * std::log1p(h / nu));
}

std::vector<CompositeGrad> composite_backward(const Vec3& pixel_grad,
                                              std::span<const CompositeEntry> ordered,
                                              const Vec3& background, const CompositeResult& forward) {
    if (forward.count > ordered.size()) {
        throw std::invalid_argument("composite_backward: forward consumed more entries than given");
    }
    const std::size_t n = forward.count;
    std::vector<CompositeGrad> grads(ordered.size());
    std::vector<double> w_before(n);
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        w_before[i] = w;
        w *= 1.0 - ordered[i].opacity * ordered[i].density;
    }
    // colour seen behind entry i, excluding everything at or in front of it
    Vec3 behind = background;
    for (std::size_t k = n; k-- > 0;) {
        const auto& e = ordered[k];
        const double alpha = e.opacity * e.density;
        auto& g = grads[k];
        g.d_color = pixel_grad * (alpha * w_before[k]);
        const double d_alpha = w_before[k] * pixel_grad.dot(e.color - behind);
        g.d_opacity = d_alpha * e.density;
        g.d_density = d_alpha * e.opacity;
        behind = e.color * alpha + behind * (1.0 - alpha);
    }
    return grads;
}

namespace {

Vec4 quaternion_backward(const Vec4& raw, const Mat3& d_rot) {
    const double n = raw.norm();
    const Vec4 q = normalized_quaternion(raw);
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const Mat3& g = d_rot;
    Vec4 dq;
    dq[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    dq[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) +
                   z * g(2, 0) + w * g(2, 1) - 2.0 * x * g(2, 2));
    dq[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                   w * g(2, 0) + z * g(2, 1) - 2.0 * y * g(2, 2));
    dq[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) +
                   y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
    if (n == 0.0 || !std::isfinite(n)) {
        return Vec4::Zero();
    }
    // through q / |q|
    return (dq - q * q.dot(dq)) / n;
}

}  // namespace

ProjectionGrad projection_backward(const Projected2D& proj, const Vec2& d_mean2d,
                                   const Mat2& d_cov2d, const TComponent& component,
                                   const Camera& camera) {
    ProjectionGrad out;
    const Mat3& r_wc = camera.rotation_wc;
    const Vec3& p = proj.cam_mean;
    const Mat23& jac = proj.jacobian;
    const Mat2 g = 0.5 * (d_cov2d + d_cov2d.transpose());

    const Mat3 rq = rotation_matrix(component.rotation);
    const Vec3 s = scale_of(component);
    const Mat3 m = rq * s.asDiagonal();
    const Mat3 sigma = m * m.transpose();
    const Mat3 view_cov = r_wc * sigma * r_wc.transpose();

    Vec3 d_p = jac.transpose() * d_mean2d;
    const Mat23 d_jac = 2.0 * g * jac * view_cov;
    const double iz = 1.0 / p.z(), iz2 = iz * iz, iz3 = iz2 * iz;
    d_p.x() += d_jac(0, 2) * (-camera.fx * iz2);
    d_p.y() += d_jac(1, 2) * (-camera.fy * iz2);
    d_p.z() += d_jac(0, 0) * (-camera.fx * iz2) + d_jac(0, 2) * (2.0 * camera.fx * p.x() * iz3) +
               d_jac(1, 1) * (-camera.fy * iz2) + d_jac(1, 2) * (2.0 * camera.fy * p.y() * iz3);
    out.d_position = r_wc.transpose() * d_p;

    const Mat3 d_view = jac.transpose() * g * jac;
    const Mat3 d_sigma = r_wc.transpose() * d_view * r_wc;
    const Mat3 d_m = 2.0 * d_sigma * m;
    Mat3 d_rq;
    for (int j = 0; j < 3; ++j) {
        out.d_log_scale[j] = d_m.col(j).dot(rq.col(j)) * s[j];
        d_rq.col(j) = d_m.col(j) * s[j];
    }
    out.d_rotation = quaternion_backward(component.rotation, d_rq);
    return out;
}

namespace {

struct TileAccum {
    std::vector<Vec2> d_mean2d;
    std::vector<Vec3> d_conic;  // (dL/dQ00, dL/dQ01, dL/dQ11), Q01 and Q10 each carrying the cross term
    std::vector<Vec3> d_color;
    std::vector<double> d_opacity;
    std::vector<double> d_nu;

    void resize(std::size_t n) {
        d_mean2d.assign(n, Vec2::Zero());
        d_conic.assign(n, Vec3::Zero());
        d_color.assign(n, Vec3::Zero());
        d_opacity.assign(n, 0.0);
        d_nu.assign(n, 0.0);
    }
};

struct Visit {
    std::size_t slot;
    double h;
    double density;
    double alpha;
    double w_before;
    Vec2 offset;
};

}  // namespace

ParamGrads render_backward(const Mixture& mixture, const Camera& camera, const Image& d_image,
                           const FrameBuffer& forward, const RenderSettings& settings,
                           NuGradient nu_mode) {
    const int w = camera.width, h = camera.height;
    if (d_image.width != w || d_image.height != h || forward.width != w || forward.height != h) {
        throw std::invalid_argument("render_backward: image size mismatch");
    }
    const FrameContext ctx = prepare_frame(mixture, camera, settings);
    const auto& bins = ctx.binning;
    const int ts = bins.tile_size;
    const Vec3 bg = mixture.background;

    std::vector<TileAccum> accum(bins.tiles.size());
    parallel_for(bins.tiles.size(), settings.threads, [&](std::size_t t) {
        const auto& list = bins.tiles[t];
        auto& acc = accum[t];
        acc.resize(list.size());
        if (list.empty()) return;
        const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
        std::vector<Visit> visits;
        visits.reserve(list.size());
        for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
                const Vec3 g = d_image.pixel(x, y);
                if (g.isZero(0.0)) continue;
                const auto pix = static_cast<std::size_t>(y) * w + x;
                const std::size_t consumed = std::min<std::size_t>(forward.consumed[pix], list.size());
                const Vec2 u(x, y);
                visits.clear();
                double trans = 1.0;
                for (std::size_t j = 0; j < consumed; ++j) {
                    const auto& pc = *ctx.components[list[j]];
                    const Vec2 d = u - pc.proj.mean2d;
                    const double hm = d.dot(pc.conic * d);
                    if (hm > pc.cutoff_h) continue;
                    const double dens = t_kernel(hm, pc.proj.nu, 2);
                    const double alpha = pc.opacity * dens;
                    visits.push_back({j, hm, dens, alpha, trans, d});
                    trans *= 1.0 - alpha;
                }
                Vec3 behind = bg;
                for (std::size_t k = visits.size(); k-- > 0;) {
                    const auto& v = visits[k];
                    const auto& pc = *ctx.components[list[v.slot]];
                    acc.d_color[v.slot] += g * (v.alpha * v.w_before);
                    const double d_alpha = v.w_before * g.dot(pc.color - behind);
                    acc.d_opacity[v.slot] += d_alpha * v.density;
                    const double d_dens = d_alpha * pc.opacity;
                    const double d_h = d_dens * dT2D_dh(v.h, pc.proj.nu);
                    acc.d_nu[v.slot] += d_dens * dT2D_dnu(v.h, pc.proj.nu, nu_mode);
                    // h = d^T Q d with d = u - mean
                    acc.d_mean2d[v.slot] += -2.0 * d_h * (pc.conic * v.offset);
                    acc.d_conic[v.slot] += d_h * Vec3(v.offset.x() * v.offset.x(),
                                                      v.offset.x() * v.offset.y(),
                                                      v.offset.y() * v.offset.y());
                    behind = pc.color * v.alpha + behind * (1.0 - v.alpha);
                }
            }
        }
    });

    // fixed tile order keeps the reduction deterministic
    const std::size_t n = mixture.size();
    std::vector<Vec2> d_mean2d(n, Vec2::Zero());
    std::vector<Vec3> d_conic(n, Vec3::Zero());
    std::vector<Vec3> d_color(n, Vec3::Zero());
    std::vector<double> d_opacity(n, 0.0), d_nu(n, 0.0);
    for (std::size_t t = 0; t < bins.tiles.size(); ++t) {
        const auto& list = bins.tiles[t];
        const auto& acc = accum[t];
        for (std::size_t j = 0; j < list.size(); ++j) {
            const auto i = list[j];
            d_mean2d[i] += acc.d_mean2d[j];
            d_conic[i] += acc.d_conic[j];
            d_color[i] += acc.d_color[j];
            d_opacity[i] += acc.d_opacity[j];
            d_nu[i] += acc.d_nu[j];
        }
    }

    ParamGrads grads = ParamGrads::zeros_like(mixture);
    const int degree = ctx.sh_degree;
    parallel_for(n, settings.threads, [&](std::size_t i) {
        if (!ctx.components[i]) return;
        const auto& pc = *ctx.components[i];
        const auto& comp = mixture.components[i];
        auto& out = grads[i];

        Mat2 g_conic;
        g_conic << d_conic[i][0], d_conic[i][1], d_conic[i][1], d_conic[i][2];
        const Mat2 d_cov2d = -pc.conic * g_conic * pc.conic;
        const ProjectionGrad pg = projection_backward(pc.proj, d_mean2d[i], d_cov2d, comp, camera);
        out.position = pg.d_position;
        out.log_scale = pg.d_log_scale;
        out.rotation = pg.d_rotation;

        Vec3 dc = d_color[i];
        for (int c = 0; c < 3; ++c) {
            if (pc.color_unclamped[c] < 0.0) dc[c] = 0.0;
        }
        const double len = pc.view_vector.norm();
        const Vec3 dir = len > 0.0 ? Vec3(pc.view_vector / len) : Vec3(0.0, 0.0, 1.0);
        const auto basis = sh_basis(dir, degree);
        const auto basis_grad = sh_basis_gradient(dir, degree);
        Vec3 d_dir = Vec3::Zero();
        for (int k = 0; k < sh_coeff_count(degree); ++k) {
            out.sh[k] = basis[k] * dc;
            d_dir += basis_grad[k] * dc.dot(comp.sh[k]);
        }
        if (len > 0.0) {
            out.position += (d_dir - dir * dir.dot(d_dir)) / len;
        }

        out.raw_opacity = d_opacity[i] * (1.0 - pc.opacity * pc.opacity);
        out.raw_nu = d_nu[i] * nu_derivative(comp.raw_nu);
    });
    return grads;
}

}  // namespace tsplat
