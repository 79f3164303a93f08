#pragma once

#include "ihdr/image.hpp"
#include "ihdr/tonemap.hpp"

namespace ihdr {

/// 10·log10(peak² / MSE) over all samples; +∞ for identical inputs.
double psnr(const RgbBuffer& a, const RgbBuffer& b, double peak = 1.0);

/// Mean SSIM of the luma channels: 11×11 Gaussian window (σ = 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, valid window positions only.
double ssim(const RgbBuffer& a, const RgbBuffer& b);
double ssim(const Plane& a, const Plane& b);

struct MetricsReport {
    double psnr_l = 0.0;
    double psnr_mu = 0.0;
    double ssim_l = 0.0;
    double ssim_mu = 0.0;
};

/// Both images are divided by max(h_gt) first; μ-domain metrics apply
/// mu_law(·, mu) after that.
MetricsReport evaluate(const HdrImage& h_hat, const HdrImage& h_gt, double mu = kDefaultMu);

}  // namespace ihdr
