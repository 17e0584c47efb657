#pragma once

#include "tsplat/config.hpp"
#include "tsplat/gradients.hpp"
#include "tsplat/image.hpp"
#include "tsplat/mixture.hpp"

namespace tsplat {

struct LossBreakdown {
    double l1 = 0.0;
    double dssim = 0.0;
    double opacity_reg = 0.0;
    double sigma_reg = 0.0;
    double total = 0.0;
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean absolute difference over pixels and channels.
double l1_loss(const Image& a, const Image& b);

double mse(const Image& a, const Image& b);

/// Mean local SSIM over valid 11x11 Gaussian windows (no padding), all channels.
double ssim(const Image& a, const Image& b);

/// SSIM together with dSSIM/da written to `d_a` (resized to a's shape).
double ssim_with_grad(const Image& a, const Image& b, Image& d_a);

/// -10 log10(MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

/// Sum of |o_i|.
double opacity_regularizer(const Mixture& mixture);

/// Sum over components of the square roots of the covariance eigenvalues.
double sigma_regularizer(const Mixture& mixture);

LossBreakdown total_loss(const Image& render, const Image& target, const Mixture& mixture,
                         const LossWeights& weights);

/// Same value as total_loss. Writes dL/drender into `d_render` and adds the regularizer
/// gradients (raw opacity, log-scale) into `grads`.
LossBreakdown total_loss_backward(const Image& render, const Image& target, const Mixture& mixture,
                                  const LossWeights& weights, Image& d_render, ParamGrads& grads);

}  // namespace tsplat
