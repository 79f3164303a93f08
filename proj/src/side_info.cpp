#include "ihdr/side_info.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ihdr/error.hpp"
#include "ihdr/parallel.hpp"

namespace ihdr {

HdrImage pseudo_hdr(const LdrImage& image, double gamma) {
    if (!(gamma > 0.0)) throw_usage("gamma must be positive");
    const double t = image.exposure_time();
    if (!(t > 0.0)) throw_usage("non-positive exposure time");
    RgbBuffer out(image.width(), image.height());
    const auto src = image.pixels().data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::pow(src[i], gamma) / t;
    return HdrImage(std::move(out));
}

Eigen2 symmetric_eigen2(double a, double b, double c) {
    const double half_trace = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    const double disc = std::hypot(half_diff, b);
    const double lmax = half_trace + disc;
    const double det = a * c - b * b;
    // det / lmax avoids the cancellation in half_trace - disc.
    double lmin = lmax > 0.0 ? det / lmax : 0.0;
    if (lmin < 0.0) lmin = 0.0;
    return {std::max(lmax, 0.0), lmin, 0.5 * std::atan2(2.0 * b, a - c)};
}

StructureTensorResult structure_tensor(const Plane& gray, const StructureTensorOptions& opts) {
    if (opts.window < 3 || opts.window % 2 == 0)
        throw_usage("structure tensor window must be odd and >= 3, got " + std::to_string(opts.window));
    if (!(opts.tau > 0.0)) throw_usage("structure tensor tau must be positive");

    const int w = gray.width(), h = gray.height();
    Plane gx(w, h), gy(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gx(x, y) = 0.5 * (gray.clamped(x + 1, y) - gray.clamped(x - 1, y));
            gy(x, y) = 0.5 * (gray.clamped(x, y + 1) - gray.clamped(x, y - 1));
        }
    }

    StructureTensorResult r{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h),
                            Plane(w, h), Plane(w, h), Plane(w, h)};
    const int half = opts.window / 2;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t y0, std::size_t y1) {
        for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
            for (int x = 0; x < w; ++x) {
                double a = 0.0, b = 0.0, c = 0.0;
                for (int dy = -half; dy <= half; ++dy) {
                    for (int dx = -half; dx <= half; ++dx) {
                        const double u = gx.clamped(x + dx, y + dy);
                        const double v = gy.clamped(x + dx, y + dy);
                        a += u * u;
                        b += u * v;
                        c += v * v;
                    }
                }
                const Eigen2 e = symmetric_eigen2(a, b, c);
                r.eigen_max(x, y) = e.max;
                r.eigen_min(x, y) = e.min;
                r.orientation(x, y) = e.angle;
                const bool flat = e.max < opts.tau;
                const bool edge = !flat && e.min < opts.tau;
                r.flat_map(x, y) = flat ? 1.0 : 0.0;
                r.edge_map(x, y) = edge ? 1.0 : 0.0;
                r.corner_map(x, y) = (!flat && !edge) ? 1.0 : 0.0;
                r.reversed_flat(x, y) = flat ? 0.0 : 1.0;
            }
        }
    });
    return r;
}

StructureTensorResult structure_tensor(const LdrImage& image, const StructureTensorOptions& opts) {
    return structure_tensor(luma(image), opts);
}

RgbBuffer histogram_equalize(const RgbBuffer& image) {
    constexpr int kBins = 256;
    RgbBuffer out = image;
    const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
    for (int c = 0; c < 3; ++c) {
        std::array<std::size_t, kBins> hist{};
        auto bin_of = [](double v) { return std::min(kBins - 1, static_cast<int>(std::floor(v * kBins))); };
        for (int y = 0; y < image.height(); ++y)
            for (int x = 0; x < image.width(); ++x) ++hist[bin_of(image(x, y, c))];

        std::array<std::size_t, kBins> cdf{};
        std::size_t acc = 0;
        for (int b = 0; b < kBins; ++b) cdf[b] = (acc += hist[b]);
        std::size_t cdf_min = 0;
        for (int b = 0; b < kBins; ++b)
            if (hist[b] != 0) {
                cdf_min = cdf[b];
                break;
            }
        if (cdf_min == n) continue;  // single occupied bin: leave the channel as is
        const double denom = static_cast<double>(n - cdf_min);
        for (int y = 0; y < image.height(); ++y)
            for (int x = 0; x < image.width(); ++x)
                out(x, y, c) = static_cast<double>(cdf[bin_of(image(x, y, c))] - cdf_min) / denom;
    }
    return out;
}

std::vector<double> gaussian_kernel(int radius) {
    if (radius < 1) throw_usage("blur radius must be >= 1");
    const double sigma = radius / 3.0;
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= sum;
    return k;
}

Plane gaussian_blur(const Plane& plane, int radius) {
    const std::vector<double> k = gaussian_kernel(radius);
    const int w = plane.width(), h = plane.height();
    Plane tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * plane.clamped(x + i, y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp.clamped(x, y + i);
            out(x, y) = s;
        }
    return out;
}

RgbBuffer gaussian_blur(const RgbBuffer& image, int radius) {
    RgbBuffer out(image.width(), image.height());
    for (int c = 0; c < 3; ++c) out.set_channel(c, gaussian_blur(image.channel(c), radius));
    return out;
}

Plane difference_transform(const RgbBuffer& image, int blur_radius) {
    // Blur and the gray projection are both linear, so graying first is
    // equivalent and three times cheaper.
    return gaussian_blur(luma(histogram_equalize(image)), blur_radius);
}

DifferenceMask difference_mask(const LdrImage& ref, const LdrImage& nonref, double threshold, int blur_radius) {
    if (!ref.pixels().same_shape(nonref.pixels())) throw_usage("difference_mask: dimension mismatch");
    if (!(threshold > 0.0 && threshold < 1.0)) throw_usage("difference_mask: threshold must lie in (0,1)");
    if (blur_radius < 1) throw_usage("difference_mask: blur_radius must be >= 1");
    const Plane a = difference_transform(ref.pixels(), blur_radius);
    const Plane b = difference_transform(nonref.pixels(), blur_radius);
    DifferenceMask d{Plane(ref.width(), ref.height()), threshold, blur_radius};
    for (int y = 0; y < ref.height(); ++y)
        for (int x = 0; x < ref.width(); ++x) d.mask(x, y) = std::abs(a(x, y) - b(x, y)) > threshold ? 1.0 : 0.0;
    return d;
}

Plane max_pool2(const Plane& plane) {
    if (plane.width() % 2 != 0 || plane.height() % 2 != 0)
        throw_usage("max_pool2 requires even dimensions, got " + std::to_string(plane.width()) + "x" +
                    std::to_string(plane.height()));
    Plane out(plane.width() / 2, plane.height() / 2);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out(x, y) = std::max({plane(2 * x, 2 * y), plane(2 * x + 1, 2 * y), plane(2 * x, 2 * y + 1),
                                  plane(2 * x + 1, 2 * y + 1)});
    return out;
}

std::vector<Plane> multiscale_st(const StructureTensorResult& st, int levels) {
    if (levels < 1) throw_usage("multiscale_st: levels must be >= 1");
    const int div = 1 << (levels - 1);
    const Plane& base = st.reversed_flat;
    if (base.width() % div != 0 || base.height() % div != 0)
        throw_usage("multiscale_st: dimensions " + std::to_string(base.width()) + "x" + std::to_string(base.height()) +
                    " not divisible by " + std::to_string(div));
    std::vector<Plane> out;
    out.reserve(levels);
    out.push_back(base);
    for (int l = 1; l < levels; ++l) out.push_back(max_pool2(out.back()));
    return out;
}

Plane laplacian_edge_map(const LdrImage& image, double threshold) {
    const Plane y = luma(image);
    Plane out(y.width(), y.height());
    for (int r = 0; r < y.height(); ++r)
        for (int c = 0; c < y.width(); ++c) {
            const double lap = y.clamped(c - 1, r) + y.clamped(c + 1, r) + y.clamped(c, r - 1) + y.clamped(c, r + 1) -
                               4.0 * y(c, r);
            out(c, r) = std::abs(lap) > threshold ? 1.0 : 0.0;
        }
    return out;
}

SideInfoBundle make_side_info(const LdrImage& ref, const LdrImage& nonref, const SideInfoOptions& opts) {
    if (!ref.pixels().same_shape(nonref.pixels())) throw_usage("side info: reference/non-reference size mismatch");
    return SideInfoBundle{ref,
                          nonref,
                          pseudo_hdr(ref, opts.gamma),
                          pseudo_hdr(nonref, opts.gamma),
                          structure_tensor(ref, opts.st),
                          difference_mask(ref, nonref, opts.diff_threshold, opts.blur_radius)};
}

}  // namespace ihdr
