#include "tsplat/loss.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tsplat {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b) || a.data.size() != b.data.size()) {
        throw std::invalid_argument(std::string(what) + ": image shape mismatch");
    }
}

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Single-channel plane.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
    double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

using Kernel = std::array<double, kSsimWindow>;

// out(x, y) = sum_ij k_i k_j in(x + i, y + j) over the valid region.
Plane filter_valid(const Plane& in, const Kernel& k) {
    const int ow = in.w - kSsimWindow + 1, oh = in.h - kSsimWindow + 1;
    Plane rows(ow, in.h);
    for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) s += k[i] * in(x + i, y);
            rows(x, y) = s;
        }
    }
    Plane out(ow, oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int j = 0; j < kSsimWindow; ++j) s += k[j] * rows(x, y + j);
            out(x, y) = s;
        }
    }
    return out;
}

// Adjoint of filter_valid.
Plane filter_valid_adjoint(const Plane& out, const Kernel& k, int w, int h) {
    Plane rows(out.w, h);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            for (int j = 0; j < kSsimWindow; ++j) rows(x, y + j) += k[j] * out(x, y);
        }
    }
    Plane in(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            const double r = rows(x, y);
            for (int i = 0; i < kSsimWindow; ++i) in(x + i, y) += k[i] * r;
        }
    }
    return in;
}

Plane channel(const Image& img, int c) {
    Plane p(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) p(x, y) = img.at(x, y, c);
    return p;
}

Plane product(const Plane& a, const Plane& b) {
    Plane p(a.w, a.h);
    for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = a.v[i] * b.v[i];
    return p;
}

double ssim_impl(const Image& a, const Image& b, Image* d_a) {
    require_same_shape(a, b, "ssim");
    if (a.width < kSsimWindow || a.height < kSsimWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }
    const Kernel k = gaussian_window();
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const int ow = a.width - kSsimWindow + 1, oh = a.height - kSsimWindow + 1;
    const double count = 3.0 * ow * oh;
    if (d_a) *d_a = Image(a.width, a.height);

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Plane x = channel(a, c), y = channel(b, c);
        const Plane mx = filter_valid(x, k), my = filter_valid(y, k);
        const Plane exx = filter_valid(product(x, x), k);
        const Plane eyy = filter_valid(product(y, y), k);
        const Plane exy = filter_valid(product(x, y), k);
        Plane g_mu(ow, oh), g_exx(ow, oh), g_exy(ow, oh);
        for (int j = 0; j < oh; ++j) {
            for (int i = 0; i < ow; ++i) {
                const double ux = mx(i, j), uy = my(i, j);
                const double vx = exx(i, j) - ux * ux, vy = eyy(i, j) - uy * uy;
                const double cxy = exy(i, j) - ux * uy;
                const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * cxy + c2;
                const double b1 = ux * ux + uy * uy + c1, b2 = vx + vy + c2;
                const double s = a1 * a2 / (b1 * b2);
                total += s;
                if (d_a) {
                    // S as a function of (mu_x, E[x^2], E[xy])
                    const double inv = 1.0 / (b1 * b2);
                    g_mu(i, j) = ((2.0 * uy * a2 + a1 * (-2.0 * uy)) * inv -
                                  s * (2.0 * ux / b1 - 2.0 * ux / b2)) / count;
                    g_exx(i, j) = -s / b2 / count;
                    g_exy(i, j) = 2.0 * a1 * inv / count;
                }
            }
        }
        if (d_a) {
            const Plane p_mu = filter_valid_adjoint(g_mu, k, a.width, a.height);
            const Plane p_xx = filter_valid_adjoint(g_exx, k, a.width, a.height);
            const Plane p_xy = filter_valid_adjoint(g_exy, k, a.width, a.height);
            for (int yy = 0; yy < a.height; ++yy) {
                for (int xx = 0; xx < a.width; ++xx) {
                    d_a->at(xx, yy, c) =
                        p_mu(xx, yy) + 2.0 * x(xx, yy) * p_xx(xx, yy) + y(xx, yy) * p_xy(xx, yy);
                }
            }
        }
    }
    return total / count;
}

}  // namespace

double l1_loss(const Image& a, const Image& b) {
    require_same_shape(a, b, "l1_loss");
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double ssim_with_grad(const Image& a, const Image& b, Image& d_a) { return ssim_impl(a, b, &d_a); }

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double opacity_regularizer(const Mixture& mixture) {
    double s = 0.0;
    for (const auto& c : mixture.components) s += std::abs(opacity_of(c.raw_opacity));
    return s;
}

double sigma_regularizer(const Mixture& mixture) {
    double s = 0.0;
    for (const auto& c : mixture.components) {
        const Vec3 lambda = eigenvalues_of(covariance_of(c));
        for (int j = 0; j < 3; ++j) s += std::sqrt(std::max(0.0, lambda[j]));
    }
    return s;
}

namespace {

double regularizer_scale(const LossWeights& w, std::size_t count) {
    return (w.per_component_mean && count > 0) ? 1.0 / static_cast<double>(count) : 1.0;
}

LossBreakdown combine(double l1, double dssim, double opacity_reg, double sigma_reg,
                      const LossWeights& w, std::size_t count) {
    const double k = regularizer_scale(w, count);
    LossBreakdown out;
    out.l1 = l1;
    out.dssim = dssim;
    out.opacity_reg = opacity_reg;
    out.sigma_reg = sigma_reg;
    out.total = (1.0 - w.dssim) * l1 + w.dssim * dssim + k * (w.opacity * opacity_reg + w.sigma * sigma_reg);
    return out;
}

}  // namespace

LossBreakdown total_loss(const Image& render, const Image& target, const Mixture& mixture,
                         const LossWeights& weights) {
    const double l1 = l1_loss(render, target);
    const double dssim = weights.dssim != 0.0 ? 1.0 - ssim(render, target) : 0.0;
    return combine(l1, dssim, opacity_regularizer(mixture), sigma_regularizer(mixture), weights,
                   mixture.size());
}

LossBreakdown total_loss_backward(const Image& render, const Image& target, const Mixture& mixture,
                                  const LossWeights& weights, Image& d_render, ParamGrads& grads) {
    require_same_shape(render, target, "total_loss");
    if (grads.size() != mixture.size()) {
        throw std::invalid_argument("total_loss_backward: gradient buffer size mismatch");
    }
    const double l1 = l1_loss(render, target);
    d_render = Image(render.width, render.height);
    const double l1_scale = (1.0 - weights.dssim) / static_cast<double>(render.data.size());
    for (std::size_t i = 0; i < render.data.size(); ++i) {
        const double d = render.data[i] - target.data[i];
        d_render.data[i] = d > 0.0 ? l1_scale : (d < 0.0 ? -l1_scale : 0.0);
    }
    double dssim = 0.0;
    if (weights.dssim != 0.0) {
        Image d_ssim;
        dssim = 1.0 - ssim_with_grad(render, target, d_ssim);
        for (std::size_t i = 0; i < render.data.size(); ++i) {
            d_render.data[i] -= weights.dssim * d_ssim.data[i];
        }
    }
    const double k = regularizer_scale(weights, mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const auto& c = mixture.components[i];
        const double o = opacity_of(c.raw_opacity);
        const double sign = o > 0.0 ? 1.0 : (o < 0.0 ? -1.0 : 0.0);
        grads[i].raw_opacity += k * weights.opacity * sign * (1.0 - o * o);
        // sqrt(lambda_j) = exp(log_scale_j)
        grads[i].log_scale += k * weights.sigma * c.log_scale.array().exp().matrix();
    }
    return combine(l1, dssim, opacity_regularizer(mixture), sigma_regularizer(mixture), weights,
                   mixture.size());
}

}  // namespace tsplat
