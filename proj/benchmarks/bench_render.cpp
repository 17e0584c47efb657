#include "tsplat/gradients.hpp"
#include "tsplat/loss.hpp"
#include "tsplat/renderer.hpp"
#include "tsplat/sh.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace tsplat;

namespace {

Mixture scene(int n, int sh_degree) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mixture m;
    m.sh_degree = sh_degree;
    const int coeffs = (sh_degree + 1) * (sh_degree + 1);
    for (int i = 0; i < n; ++i) {
        TComponent c;
        c.position = Vec3(0.8 * u(rng), 0.8 * u(rng), 3.0 + u(rng));
        c.log_scale = Vec3(std::log(0.05), std::log(0.04), std::log(0.03)) + 0.3 * Vec3(g(rng), g(rng), g(rng));
        c.rotation = Vec4(g(rng), g(rng), g(rng), g(rng)).normalized();
        c.raw_opacity = raw_opacity_for(0.8 * u(rng));
        c.raw_nu = raw_nu_for(1.0 + 20.0 * std::abs(u(rng)));
        c.sh.assign(coeffs, Vec3::Zero());
        c.sh[0] = rgb_to_sh_dc(Vec3(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng)));
        m.components.push_back(c);
    }
    return m;
}

Camera camera(int size) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = 1.2 * size;
    cam.cx = cam.cy = 0.5 * (size - 1);
    return cam;
}

void BM_Render(benchmark::State& state) {
    const Mixture m = scene(static_cast<int>(state.range(0)), 1);
    const Camera cam = camera(static_cast<int>(state.range(1)));
    RenderSettings settings;
    settings.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(render(m, cam, settings));
    state.SetItemsProcessed(state.iterations() * cam.width * cam.height);
}
BENCHMARK(BM_Render)->Args({1000, 128})->Args({10000, 128})->Args({10000, 256})->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
    const Mixture m = scene(static_cast<int>(state.range(0)), 1);
    const Camera cam = camera(static_cast<int>(state.range(1)));
    RenderSettings settings;
    settings.threads = 1;
    const FrameBuffer fb = render(m, cam, settings);
    const Image d(cam.width, cam.height, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(render_backward(m, cam, d, fb, settings));
}
BENCHMARK(BM_RenderBackward)->Args({1000, 128})->Args({10000, 128})->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Image a(size, size), b(size, size);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : a.data) v = u(rng);
    for (auto& v : b.data) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
