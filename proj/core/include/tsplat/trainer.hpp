#pragma once

#include "tsplat/checkpoint.hpp"
#include "tsplat/config.hpp"
#include "tsplat/image.hpp"
#include "tsplat/loss.hpp"
#include "tsplat/scene_io.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsplat {

struct TrainOptions {
    /// Periodic checkpoints go to out_dir/ckpt_<iteration>.json when set.
    std::optional<std::filesystem::path> out_dir;
    /// Called with every metric log line as it is produced.
    std::function<void(const std::string&)> on_log;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<std::string> log;
};

/// Fresh checkpoint for `scene`: initialized mixture and a seeded sampler.
Checkpoint initial_checkpoint(const SceneSpec& scene, const TrainConfig& config);

/// Runs iterations from checkpoint.iteration up to config.max_iterations.
TrainResult train_from(Checkpoint checkpoint, const SceneSpec& scene, const TrainOptions& options = {});

TrainResult train(const SceneSpec& scene, const TrainConfig& config, const TrainOptions& options = {});

/// SH degree active at `iteration` under the warm-up schedule.
int active_sh_degree(std::int64_t iteration, const TrainConfig& config);

struct ViewMetrics {
    std::size_t camera = 0;
    bool train = true;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Per-view PSNR and SSIM of the checkpoint's renders against the scene images.
std::vector<ViewMetrics> evaluate_views(const Checkpoint& checkpoint, const SceneSpec& scene);

/// Writes view_<i>.ppm per camera and metrics.csv (one row per view plus a mean row).
std::vector<ViewMetrics> render_views(const Checkpoint& checkpoint, const SceneSpec& scene,
                                      const std::filesystem::path& out_dir);

std::string metrics_csv(const std::vector<ViewMetrics>& metrics);

struct Fit2dResult {
    Checkpoint checkpoint;
    Image initial;
    Image final;
    double initial_psnr = 0.0;
    double final_psnr = 0.0;
    std::vector<std::string> log;
};

/// Scene with a single fronto-parallel camera at the origin looking down +z (fx = fy = width,
/// principal point at the image centre) and `components` points sampled on the plane z = 1,
/// coloured from the target pixels beneath them.
SceneSpec fit2d_scene(const Image& target, int components, std::uint64_t seed);

/// Fits `target` with `config` (SH degree and extent taken from the toy scene).
Fit2dResult fit2d(const Image& target, int components, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace tsplat
