#include "parity.hpp"

#include "helpers.hpp"
#include "oracles.hpp"
#include "tsplat/gradients.hpp"
#include "tsplat/loss.hpp"
#include "tsplat/renderer.hpp"

#include <cmath>
#include <functional>

namespace tsplat::support {

ParityScene random_parity_scene(std::mt19937_64& rng, int components, int size, int sh_degree) {
    ParityScene s;
    s.mixture = random_mixture(rng, components, sh_degree);
    s.camera = square_camera(size);
    // small offsets keep the eye off the component axes and exercise the rotation terms
    s.camera.translation_wc = Vec3(0.05, -0.03, 0.1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    s.target = Image(size, size);
    for (auto& v : s.target.data) v = u(rng);
    s.settings.tau = 1e-14;
    s.settings.min_radius_px = 0.0;
    s.settings.early_stop = false;
    s.settings.threads = 1;
    return s;
}

namespace {

struct Group {
    std::string name;
    std::vector<std::function<double&(Mixture&)>> params;
    std::vector<std::function<double(const ParamGrads&)>> grads;
};

std::vector<Group> groups_for(const Mixture& m) {
    std::vector<Group> out(6);
    out[0].name = "position";
    out[1].name = "log_scale";
    out[2].name = "rotation";
    out[3].name = "sh";
    out[4].name = "raw_opacity";
    out[5].name = "raw_nu";
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            out[0].params.push_back([i, k](Mixture& x) -> double& { return x.components[i].position[k]; });
            out[0].grads.push_back([i, k](const ParamGrads& g) { return g[i].position[k]; });
            out[1].params.push_back([i, k](Mixture& x) -> double& { return x.components[i].log_scale[k]; });
            out[1].grads.push_back([i, k](const ParamGrads& g) { return g[i].log_scale[k]; });
        }
        for (int k = 0; k < 4; ++k) {
            out[2].params.push_back([i, k](Mixture& x) -> double& { return x.components[i].rotation[k]; });
            out[2].grads.push_back([i, k](const ParamGrads& g) { return g[i].rotation[k]; });
        }
        for (std::size_t s = 0; s < m.components[i].sh.size(); ++s) {
            for (int c = 0; c < 3; ++c) {
                out[3].params.push_back([i, s, c](Mixture& x) -> double& { return x.components[i].sh[s][c]; });
                out[3].grads.push_back([i, s, c](const ParamGrads& g) { return g[i].sh[s][c]; });
            }
        }
        out[4].params.push_back([i](Mixture& x) -> double& { return x.components[i].raw_opacity; });
        out[4].grads.push_back([i](const ParamGrads& g) { return g[i].raw_opacity; });
        out[5].params.push_back([i](Mixture& x) -> double& { return x.components[i].raw_nu; });
        out[5].grads.push_back([i](const ParamGrads& g) { return g[i].raw_nu; });
    }
    return out;
}

}  // namespace

std::vector<GroupError> gradient_parity(const ParityScene& scene, const LossWeights& weights,
                                        NuGradient mode, double floor) {
    const auto fb = render(scene.mixture, scene.camera, scene.settings);
    Image d_render;
    ParamGrads grads = ParamGrads::zeros_like(scene.mixture);
    total_loss_backward(fb.raw_rgb, scene.target, scene.mixture, weights, d_render, grads);
    grads += render_backward(scene.mixture, scene.camera, d_render, fb, scene.settings, mode);

    Mixture work = scene.mixture;
    const auto loss = [&]() {
        return total_loss(render(work, scene.camera, scene.settings).raw_rgb, scene.target, work, weights).total;
    };

    std::vector<GroupError> out;
    for (auto& group : groups_for(scene.mixture)) {
        double diff2 = 0.0, fd2 = 0.0;
        for (std::size_t p = 0; p < group.params.size(); ++p) {
            double& slot = group.params[p](work);
            const double x0 = slot;
            const double fd = oracle::central_difference(
                [&](double x) {
                    slot = x;
                    return loss();
                },
                x0);
            slot = x0;
            const double a = group.grads[p](grads);
            diff2 += (a - fd) * (a - fd);
            fd2 += fd * fd;
        }
        GroupError e;
        e.group = group.name;
        e.fd_norm = std::sqrt(fd2);
        e.relative = std::sqrt(diff2) / std::max(e.fd_norm, floor);
        out.push_back(e);
    }
    return out;
}

}  // namespace tsplat::support
