#include "ihdr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ihdr/error.hpp"

namespace ihdr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> ssim_kernel() {
    std::vector<double> k(kWindow);
    double s = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        s += k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    }
    for (double& v : k) v /= s;
    return k;
}

/// Separable "valid" correlation with the SSIM window.
Plane filter_valid(const Plane& p, const std::vector<double>& k) {
    const int ow = p.width() - kWindow + 1, oh = p.height() - kWindow + 1;
    Plane tmp(ow, p.height());
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWindow; ++i) s += k[i] * p(x + i, y);
            tmp(x, y) = s;
        }
    Plane out(ow, oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWindow; ++i) s += k[i] * tmp(x, y + i);
            out(x, y) = s;
        }
    return out;
}

Plane product(const Plane& a, const Plane& b) {
    Plane out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

RgbBuffer scaled(const RgbBuffer& src, double s) {
    RgbBuffer out = src;
    for (double& v : out.data()) v *= s;
    return out;
}

}  // namespace

double psnr(const RgbBuffer& a, const RgbBuffer& b, double peak) {
    if (!a.same_shape(b)) throw_usage("psnr: shape mismatch");
    if (!(peak > 0.0)) throw_usage("psnr: peak must be positive");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = se / static_cast<double>(a.size());
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Plane& a, const Plane& b) {
    if (!a.same_shape(b)) throw_usage("ssim: shape mismatch");
    if (a.width() < kWindow || a.height() < kWindow) throw_usage("ssim: images must be at least 11x11");
    const auto k = ssim_kernel();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const Plane mu_a = filter_valid(a, k), mu_b = filter_valid(b, k);
    const Plane saa = filter_valid(product(a, a), k), sbb = filter_valid(product(b, b), k);
    const Plane sab = filter_valid(product(a, b), k);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.data()[i], mb = mu_b.data()[i];
        const double va = saa.data()[i] - ma * ma, vb = sbb.data()[i] - mb * mb, cov = sab.data()[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

double ssim(const RgbBuffer& a, const RgbBuffer& b) {
    if (!a.same_shape(b)) throw_usage("ssim: shape mismatch");
    return ssim(luma(a), luma(b));
}

MetricsReport evaluate(const HdrImage& h_hat, const HdrImage& h_gt, double mu) {
    if (!h_hat.pixels().same_shape(h_gt.pixels())) throw_usage("evaluate: shape mismatch");
    if (!(mu > 0.0)) throw_usage("evaluate: mu must be positive");
    const double m = h_gt.max_value();
    const double s = m > 0.0 ? 1.0 / m : 1.0;
    const RgbBuffer a = scaled(h_hat.pixels(), s), b = scaled(h_gt.pixels(), s);
    const RgbBuffer ma = mu_law(a, mu), mb = mu_law(b, mu);
    return {psnr(a, b), psnr(ma, mb), ssim(a, b), ssim(ma, mb)};
}

}  // namespace ihdr
