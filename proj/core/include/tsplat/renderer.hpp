#pragma once

#include "tsplat/config.hpp"
#include "tsplat/image.hpp"
#include "tsplat/mixture.hpp"
#include "tsplat/tmath.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tsplat {

struct CompositeEntry {
    Vec3 color = Vec3::Zero();
    double opacity = 0.0;
    double density = 0.0;
    double depth = 0.0;  // only used to check ordering in debug builds
};

struct CompositeOptions {
    bool early_stop = false;
    double transmittance_floor = 1e-4;
};

struct CompositeResult {
    Vec3 rgb = Vec3::Zero();
    double transmittance = 1.0;
    std::size_t count = 0;  // entries consumed before stopping
};

/// Front-to-back accumulation of signed splats. Expects ascending depth.
CompositeResult composite_pixel(std::span<const CompositeEntry> ordered, const Vec3& background,
                                const CompositeOptions& options = {});

struct TileBinning {
    int tile_size = 16;
    int tiles_x = 0;
    int tiles_y = 0;
    /// Component indices per tile, ascending depth then ascending index.
    std::vector<std::vector<std::uint32_t>> tiles;

    const std::vector<std::uint32_t>& tile(int tx, int ty) const {
        return tiles[static_cast<std::size_t>(ty) * tiles_x + tx];
    }
};

/// Depth sort plus assignment of every cutoff disc to the tiles it touches.
TileBinning sort_and_bin(std::span<const std::optional<Projected2D>> projections, int width,
                         int height, int tile_size);

/// Per-frame view of one component after projection and colour evaluation.
struct PreparedComponent {
    Projected2D proj;
    Mat2 conic = Mat2::Identity();  // cov2d^-1
    double cutoff_h = 0.0;          // squared Mahalanobis truncation level
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();      // after the max(0, .) clamp
    Vec3 color_unclamped = Vec3::Zero();
    Vec3 view_vector = Vec3::Zero();  // position - camera centre, unnormalized
};

struct FrameContext {
    int sh_degree = 0;
    std::vector<std::optional<PreparedComponent>> components;
    TileBinning binning;
};

/// Projection, culling, colour evaluation and binning shared by forward and backward.
FrameContext prepare_frame(const Mixture& mixture, const Camera& camera,
                           const RenderSettings& settings);

struct FrameBuffer {
    int width = 0;
    int height = 0;
    Image rgb;       // clamped to [0,1], for writing and evaluation
    Image raw_rgb;   // before clamping; the training loss is taken on this
    std::vector<double> transmittance;      // final, before background blend
    std::vector<std::uint32_t> consumed;    // tile-list entries visited per pixel
    std::vector<std::uint32_t> contributors;  // entries inside the cutoff per pixel
};

FrameBuffer render(const Mixture& mixture, const Camera& camera, const RenderSettings& settings);

}  // namespace tsplat
