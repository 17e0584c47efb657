#include "tsplat/trainer.hpp"

#include "tsplat/gradients.hpp"
#include "tsplat/lifecycle.hpp"
#include "tsplat/renderer.hpp"
#include "tsplat/sghmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tsplat {

namespace fs = std::filesystem;

namespace {

// Camera order of one epoch, derived from (seed, epoch) alone so a resumed run replays it.
std::vector<std::size_t> epoch_order(const std::vector<std::size_t>& train, std::uint64_t seed,
                                     std::int64_t epoch) {
    std::vector<std::size_t> order = train;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::string format_log(std::int64_t iteration, std::size_t camera, const LossBreakdown& loss,
                       double view_psnr, std::size_t count, double epsilon) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "iter=%lld cam=%zu loss=%.17g l1=%.17g dssim=%.17g psnr=%.17g n=%zu eps=%.17g",
                  static_cast<long long>(iteration), camera, loss.total, loss.l1, loss.dssim, view_psnr,
                  count, epsilon);
    return buf;
}

RenderSettings settings_at(const TrainConfig& config, std::int64_t iteration) {
    RenderSettings s = config.render;
    s.active_sh_degree = active_sh_degree(iteration, config);
    return s;
}

void train_step(Checkpoint& ck, const SceneSpec& scene, std::size_t cam_index, LossBreakdown& loss_out,
                double& psnr_out) {
    const TrainConfig& config = ck.config;
    Mixture& mixture = ck.mixture;
    SamplerState& state = ck.state;
    const SceneCamera& view = scene.cameras[cam_index];
    const RenderSettings settings = settings_at(config, ck.iteration);

    state.iteration = ck.iteration;
    state.epsilon = lr_schedule(ck.iteration, config, ck.extent);

    const FrameBuffer frame = render(mixture, view.camera, settings);
    ParamGrads grads = ParamGrads::zeros_like(mixture);
    Image d_render;
    loss_out = total_loss_backward(frame.raw_rgb, view.image, mixture, config.loss, d_render, grads);
    psnr_out = psnr(frame.rgb, view.image);
    grads += render_backward(mixture, view.camera, d_render, frame, settings, config.nu_gradient);

    std::vector<Vec3> position_grads;
    if (config.position_gradient == PositionGradient::kAdaptive) {
        position_grads = adaptive_position_gradients(state, grads);
    } else {
        position_grads.reserve(grads.size());
        for (const auto& g : grads.components) position_grads.push_back(g.position);
    }
    sghmc_step_positions(mixture, state, position_grads, config);
    adam_step(mixture, state, grads, config);

    ++ck.iteration;
    state.iteration = ck.iteration;

    if (config.relocation_interval > 0 && ck.iteration % config.relocation_interval == 0) {
        const auto dead = find_dead(mixture, config.dead_threshold);
        const auto plan = plan_relocation(mixture, dead, config.relocation_cap, state.rng);
        relocate(mixture, plan, state, config.relocation_cap);
        if (mixture.size() < static_cast<std::size_t>(config.max_components)) {
            add_components(mixture, config.add_fraction, static_cast<std::size_t>(config.max_components),
                           state.rng, state, config.dead_threshold);
        }
    }
}

}  // namespace

int active_sh_degree(std::int64_t iteration, const TrainConfig& config) {
    if (config.sh_warmup_interval <= 0) return config.max_sh_degree;
    const auto steps = iteration / config.sh_warmup_interval;
    return static_cast<int>(std::min<std::int64_t>(config.max_sh_degree, steps));
}

Checkpoint initial_checkpoint(const SceneSpec& scene, const TrainConfig& config) {
    validate_config(config);
    Checkpoint ck;
    ck.config = config;
    ck.extent = scene.extent;
    ck.mixture = init_mixture(scene, config);
    ck.state = SamplerState::create(ck.mixture, config);
    ck.state.epsilon = lr_schedule(0, config, scene.extent);
    return ck;
}

TrainResult train_from(Checkpoint ck, const SceneSpec& scene, const TrainOptions& options) {
    const TrainConfig& config = ck.config;
    validate_config(config);
    const auto train_cams = scene.train_indices();
    if (train_cams.empty()) throw std::invalid_argument("train: scene has no training camera");
    if (options.out_dir) fs::create_directories(*options.out_dir);

    TrainResult result;
    const auto n_train = static_cast<std::int64_t>(train_cams.size());
    std::int64_t cached_epoch = -1;
    std::vector<std::size_t> order;
    while (ck.iteration < config.max_iterations) {
        const std::int64_t i = ck.iteration;
        const std::int64_t epoch = i / n_train;
        if (epoch != cached_epoch) {
            order = epoch_order(train_cams, config.seed, epoch);
            cached_epoch = epoch;
        }
        const std::size_t cam = order[static_cast<std::size_t>(i % n_train)];
        LossBreakdown loss;
        double view_psnr = 0.0;
        try {
            train_step(ck, scene, cam, loss, view_psnr);
        } catch (const std::exception& e) {
            throw std::runtime_error("train step " + std::to_string(i) + ": " + e.what());
        }
        const bool last = ck.iteration == config.max_iterations;
        if ((config.log_interval > 0 && ck.iteration % config.log_interval == 0) || last) {
            result.log.push_back(format_log(i, cam, loss, view_psnr, ck.mixture.size(), ck.state.epsilon));
            if (options.on_log) options.on_log(result.log.back());
        }
        if (options.out_dir && config.checkpoint_interval > 0 && ck.iteration % config.checkpoint_interval == 0) {
            save_checkpoint(*options.out_dir / ("ckpt_" + std::to_string(ck.iteration) + ".json"), ck);
        }
    }
    result.checkpoint = std::move(ck);
    return result;
}

TrainResult train(const SceneSpec& scene, const TrainConfig& config, const TrainOptions& options) {
    return train_from(initial_checkpoint(scene, config), scene, options);
}

std::vector<ViewMetrics> evaluate_views(const Checkpoint& ck, const SceneSpec& scene) {
    const RenderSettings settings = settings_at(ck.config, ck.iteration);
    std::vector<ViewMetrics> out;
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
        const auto& view = scene.cameras[i];
        const FrameBuffer frame = render(ck.mixture, view.camera, settings);
        ViewMetrics m;
        m.camera = i;
        m.train = view.train;
        m.psnr = psnr(frame.rgb, view.image);
        const bool fits = view.image.width >= kSsimWindow && view.image.height >= kSsimWindow;
        m.ssim = fits ? ssim(frame.rgb, view.image) : std::nan("");
        out.push_back(m);
    }
    return out;
}

std::string metrics_csv(const std::vector<ViewMetrics>& metrics) {
    std::ostringstream os;
    os << "view,split,psnr,ssim\n";
    char buf[128];
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& m : metrics) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f\n", m.camera, m.train ? "train" : "test", m.psnr, m.ssim);
        os << buf;
        psnr_sum += m.psnr;
        ssim_sum += m.ssim;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, metrics.size()));
    std::snprintf(buf, sizeof buf, "mean,all,%.6f,%.6f\n", psnr_sum / n, ssim_sum / n);
    os << buf;
    return os.str();
}

std::vector<ViewMetrics> render_views(const Checkpoint& ck, const SceneSpec& scene, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const RenderSettings settings = settings_at(ck.config, ck.iteration);
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
        const FrameBuffer frame = render(ck.mixture, scene.cameras[i].camera, settings);
        char name[32];
        std::snprintf(name, sizeof name, "view_%03zu.ppm", i);
        write_ppm(out_dir / name, frame.rgb);
    }
    const auto metrics = evaluate_views(ck, scene);
    std::ofstream csv(out_dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
    csv << metrics_csv(metrics);
    return metrics;
}

SceneSpec fit2d_scene(const Image& target, int components, std::uint64_t seed) {
    if (target.width <= 0 || target.height <= 0) throw std::invalid_argument("fit2d: empty target image");
    if (components <= 0) throw std::invalid_argument("fit2d: component count must be positive");
    SceneSpec scene;
    scene.extent = 1.0;
    SceneCamera view;
    Camera& cam = view.camera;
    cam.width = target.width;
    cam.height = target.height;
    cam.fx = cam.fy = static_cast<double>(target.width);
    cam.cx = 0.5 * (target.width - 1);
    cam.cy = 0.5 * (target.height - 1);
    view.image = target;
    view.train = true;
    scene.cameras.push_back(view);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-0.5, target.width - 0.5), uy(-0.5, target.height - 0.5);
    for (int k = 0; k < components; ++k) {
        const double u = ux(rng), v = uy(rng);
        ScenePoint p;
        p.position = Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
        const int px = std::clamp(static_cast<int>(std::lround(u)), 0, target.width - 1);
        const int py = std::clamp(static_cast<int>(std::lround(v)), 0, target.height - 1);
        p.color = target.pixel(px, py);
        scene.points.push_back(p);
    }
    return scene;
}

Fit2dResult fit2d(const Image& target, int components, const TrainConfig& base, const TrainOptions& options) {
    TrainConfig config = base;
    config.max_sh_degree = 0;  // a single fixed view cannot constrain view dependence
    config.max_components = components;
    const SceneSpec scene = fit2d_scene(target, components, config.seed);

    Fit2dResult out;
    Checkpoint ck = initial_checkpoint(scene, config);
    const RenderSettings settings = settings_at(config, 0);
    out.initial = render(ck.mixture, scene.cameras[0].camera, settings).rgb;
    out.initial_psnr = psnr(out.initial, target);

    TrainResult trained = train_from(std::move(ck), scene, options);
    out.final = render(trained.checkpoint.mixture, scene.cameras[0].camera,
                       settings_at(config, trained.checkpoint.iteration))
                    .rgb;
    out.final_psnr = psnr(out.final, target);
    out.checkpoint = std::move(trained.checkpoint);
    out.log = std::move(trained.log);
    return out;
}

}  // namespace tsplat
