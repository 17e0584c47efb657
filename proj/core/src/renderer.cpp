#include "tsplat/renderer.hpp"

#include "tsplat/parallel.hpp"
#include "tsplat/sh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsplat {

CompositeResult composite_pixel(std::span<const CompositeEntry> ordered, const Vec3& background,
                                const CompositeOptions& options) {
    CompositeResult out;
    double w = 1.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        assert(i == 0 || ordered[i - 1].depth <= ordered[i].depth);
        const auto& e = ordered[i];
        const double alpha = e.opacity * e.density;
        out.rgb += e.color * (alpha * w);
        w *= 1.0 - alpha;
        out.count = i + 1;
        if (options.early_stop && w < options.transmittance_floor) {
            break;
        }
    }
    out.rgb += background * w;
    out.transmittance = w;
    return out;
}

namespace {

// Closest-point test between a disc and the closed rectangle of pixel centres of a tile.
bool disc_touches_tile(const Vec2& c, double r, int x0, int y0, int x1, int y1) {
    const double qx = std::clamp(c.x(), static_cast<double>(x0), static_cast<double>(x1));
    const double qy = std::clamp(c.y(), static_cast<double>(y0), static_cast<double>(y1));
    const double dx = c.x() - qx, dy = c.y() - qy;
    return dx * dx + dy * dy <= r * r;
}

}  // namespace

TileBinning sort_and_bin(std::span<const std::optional<Projected2D>> projections, int width,
                         int height, int tile_size) {
    if (tile_size <= 0 || width <= 0 || height <= 0) {
        throw std::invalid_argument("sort_and_bin: sizes must be positive");
    }
    TileBinning bins;
    bins.tile_size = tile_size;
    bins.tiles_x = (width + tile_size - 1) / tile_size;
    bins.tiles_y = (height + tile_size - 1) / tile_size;
    bins.tiles.resize(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y);

    std::vector<std::uint32_t> order;
    order.reserve(projections.size());
    for (std::size_t i = 0; i < projections.size(); ++i) {
        if (projections[i]) order.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = projections[a]->depth, db = projections[b]->depth;
        return da < db || (da == db && a < b);
    });

    for (const auto idx : order) {
        const auto& p = *projections[idx];
        const double r = p.cutoff_radius_px;
        const Vec2& c = p.mean2d;
        const int tx0 = std::max(0, static_cast<int>(std::floor((c.x() - r) / tile_size)));
        const int ty0 = std::max(0, static_cast<int>(std::floor((c.y() - r) / tile_size)));
        const int tx1 = std::min(bins.tiles_x - 1, static_cast<int>(std::floor((c.x() + r) / tile_size)));
        const int ty1 = std::min(bins.tiles_y - 1, static_cast<int>(std::floor((c.y() + r) / tile_size)));
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                const int x0 = tx * tile_size, y0 = ty * tile_size;
                const int x1 = std::min(width, x0 + tile_size) - 1;
                const int y1 = std::min(height, y0 + tile_size) - 1;
                if (disc_touches_tile(c, r, x0, y0, x1, y1)) {
                    bins.tiles[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(idx);
                }
            }
        }
    }
    return bins;
}

FrameContext prepare_frame(const Mixture& mixture, const Camera& camera,
                           const RenderSettings& settings) {
    validate_camera(camera);
    validate_mixture(mixture);
    FrameContext ctx;
    ctx.sh_degree = settings.active_sh_degree < 0 ? mixture.sh_degree : settings.active_sh_degree;
    if (ctx.sh_degree > mixture.sh_degree) {
        throw std::invalid_argument("render: active SH degree exceeds stored coefficients");
    }
    const Vec3 eye = camera.center();
    ctx.components.resize(mixture.size());
    std::vector<std::optional<Projected2D>> projections(mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const auto& comp = mixture.components[i];
        auto proj = project_component(comp, camera, settings.tau);
        if (!proj || !(proj->cov2d.determinant() > 0.0) ||
            !(proj->cutoff_radius_px >= settings.min_radius_px)) {
            continue;
        }
        PreparedComponent pc;
        pc.proj = *proj;
        pc.conic = proj->cov2d.inverse();
        pc.cutoff_h = cutoff_mahalanobis_sq(proj->nu, settings.tau);
        pc.opacity = opacity_of(comp.raw_opacity);
        pc.view_vector = comp.position - eye;
        const double len = pc.view_vector.norm();
        const Vec3 dir = len > 0.0 ? Vec3(pc.view_vector / len) : Vec3(0.0, 0.0, 1.0);
        const auto basis = sh_basis(dir, ctx.sh_degree);
        Vec3 c = Vec3::Constant(0.5);
        for (int k = 0; k < sh_coeff_count(ctx.sh_degree); ++k) c += basis[k] * comp.sh[k];
        pc.color_unclamped = c;
        pc.color = c.cwiseMax(0.0);
        projections[i] = proj;
        ctx.components[i] = std::move(pc);
    }
    ctx.binning = sort_and_bin(projections, camera.width, camera.height, settings.tile_size);
    return ctx;
}

FrameBuffer render(const Mixture& mixture, const Camera& camera, const RenderSettings& settings) {
    const FrameContext ctx = prepare_frame(mixture, camera, settings);
    const int w = camera.width, h = camera.height;
    FrameBuffer fb;
    fb.width = w;
    fb.height = h;
    fb.rgb = Image(w, h);
    fb.raw_rgb = Image(w, h);
    fb.transmittance.assign(static_cast<std::size_t>(w) * h, 1.0);
    fb.consumed.assign(static_cast<std::size_t>(w) * h, 0);
    fb.contributors.assign(static_cast<std::size_t>(w) * h, 0);

    const auto& bins = ctx.binning;
    const int ts = bins.tile_size;
    const Vec3 bg = mixture.background;
    parallel_for(bins.tiles.size(), settings.threads, [&](std::size_t t) {
        const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
        const auto& list = bins.tiles[t];
        for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
                const Vec2 u(x, y);
                Vec3 color = Vec3::Zero();
                double trans = 1.0;
                std::uint32_t consumed = 0, contributors = 0;
                for (std::size_t j = 0; j < list.size(); ++j) {
                    const auto& pc = *ctx.components[list[j]];
                    consumed = static_cast<std::uint32_t>(j + 1);
                    const Vec2 d = u - pc.proj.mean2d;
                    const double hm = d.dot(pc.conic * d);
                    if (hm > pc.cutoff_h) continue;
                    const double alpha = pc.opacity * t_kernel(hm, pc.proj.nu, 2);
                    color += pc.color * (alpha * trans);
                    trans *= 1.0 - alpha;
                    ++contributors;
                    if (settings.early_stop && trans < settings.transmittance_floor) break;
                }
                color += bg * trans;
                const auto p = static_cast<std::size_t>(y) * w + x;
                fb.raw_rgb.set_pixel(x, y, color);
                fb.rgb.set_pixel(x, y, color.cwiseMax(0.0).cwiseMin(1.0));
                fb.transmittance[p] = trans;
                fb.consumed[p] = consumed;
                fb.contributors[p] = contributors;
            }
        }
    });
    return fb;
}

}  // namespace tsplat
