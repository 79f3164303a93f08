#include "ihdr/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ihdr/error.hpp"
#include "ihdr/parallel.hpp"

namespace ihdr {

void SensorParams::validate() const {
    if (!(conversion_gain > 0.0)) throw_usage("conversion_gain must be > 0");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) throw_usage("quantum_efficiency must lie in (0,1]");
    if (!(dark_current >= 0.0)) throw_usage("dark_current must be >= 0");
    if (!(read_noise >= 0.0)) throw_usage("read_noise must be >= 0");
    if (!(full_well > 0.0)) throw_usage("full_well must be > 0");
    if (adc_bits < 8 || adc_bits > 16) throw_usage("adc_bits must lie in [8,16]");
    if (!(gamma > 0.0)) throw_usage("gamma must be > 0");
    if (!(c > 0.0)) throw_usage("c must be > 0");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double adc_quantize(double v, int bits) {
    const double levels = std::ldexp(1.0, bits) - 1.0;
    return std::floor(std::clamp(v, 0.0, 1.0) * levels + 0.5) / levels;
}

LdrImage simulate_ldr(const HdrImage& hdr, double exposure_time, const SensorParams& params, std::uint64_t seed,
                      NoiseMode mode, double ev) {
    params.validate();
    if (!(exposure_time > 0.0)) throw_usage("simulate_ldr: non-positive exposure time");

    const int w = hdr.width(), h = hdr.height();
    RgbBuffer out(w, h);
    const double inv_gamma = 1.0 / params.gamma;
    const double scale = exposure_time * params.quantum_efficiency;

    parallel_for(static_cast<std::size_t>(h), [&](std::size_t y0, std::size_t y1) {
        for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
            for (int x = 0; x < w; ++x) {
                const std::uint64_t pixel = static_cast<std::uint64_t>(y) * w + x;
                std::mt19937_64 rng(mix_seed(seed, pixel));
                for (int c = 0; c < 3; ++c) {
                    const double mean_e = scale * (hdr(x, y, c) + params.dark_current);
                    double electrons;
                    if (mode == NoiseMode::Stochastic) {
                        std::poisson_distribution<long long> shot(mean_e);
                        electrons = mean_e > 0.0 ? static_cast<double>(shot(rng)) : 0.0;
                    } else {
                        electrons = mean_e;
                    }
                    electrons = std::min(electrons, params.full_well);
                    double v = params.conversion_gain * electrons;
                    if (mode == NoiseMode::Stochastic && params.read_noise > 0.0) {
                        std::normal_distribution<double> read(0.0, params.read_noise);
                        v += read(rng);
                    }
                    out(x, y, c) = adc_quantize(std::pow(std::max(v, 0.0), inv_gamma), params.adc_bits);
                }
            }
        }
    });
    return LdrImage(std::move(out), exposure_time, ev);
}

LdrImage simulate_ldr_simplified(const HdrImage& hdr, const SensorParams& params) {
    params.validate();
    RgbBuffer out(hdr.width(), hdr.height());
    const auto src = hdr.pixels().data();
    auto dst = out.data();
    const double inv_gamma = 1.0 / params.gamma;
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(std::pow(params.c * src[i], inv_gamma), 0.0, 1.0);
    return LdrImage(std::move(out), params.c, 0.0);
}

HdrImage invert_simplified(const LdrImage& ldr, const SensorParams& params) {
    params.validate();
    RgbBuffer out(ldr.width(), ldr.height());
    const auto src = ldr.pixels().data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::pow(src[i], params.gamma) / params.c;
    return HdrImage(std::move(out));
}

HdrImage scene_at(const HdrImage& hdr, const MotionSpec& motion, int step) {
    RgbBuffer px = hdr.pixels();
    const int x0 = motion.x + step * motion.dx;
    const int y0 = motion.y + step * motion.dy;
    for (int y = std::max(0, y0); y < std::min(hdr.height(), y0 + motion.height); ++y)
        for (int x = std::max(0, x0); x < std::min(hdr.width(), x0 + motion.width); ++x)
            for (int c = 0; c < 3; ++c) px(x, y, c) = motion.irradiance[c];
    return HdrImage(std::move(px));
}

int anchor_index(const std::vector<double>& evs) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(evs.size()); ++i)
        if (std::abs(evs[i]) < std::abs(evs[best])) best = i;
    return best;
}

std::vector<LdrImage> simulate_frames(const HdrImage& hdr, const std::vector<double>& evs, const SensorParams& params,
                                      std::uint64_t seed, const BracketOptions& opts) {
    if (evs.empty()) throw_usage("make_bracket: empty EV list");
    params.validate();
    const double t0 = opts.base_exposure.value_or(params.base_exposure());
    if (!(t0 > 0.0)) throw_usage("make_bracket: base exposure must be positive");

    const int anchor = anchor_index(evs);
    std::vector<LdrImage> frames;
    frames.reserve(evs.size());
    for (int i = 0; i < static_cast<int>(evs.size()); ++i) {
        const HdrImage scene = opts.motion ? scene_at(hdr, *opts.motion, i - anchor) : hdr;
        const double gain = std::exp2(evs[i]);
        if (opts.model == SimulationModel::Full) {
            const double t = t0 * gain;
            LdrImage f = simulate_ldr(scene, t, params, mix_seed(seed, static_cast<std::uint64_t>(i)), opts.noise, evs[i]);
            frames.push_back(f.with_exposure(t * params.radiometric_gain(), evs[i]));
        } else {
            SensorParams p = params;
            p.c = params.c * gain;
            LdrImage f = simulate_ldr_simplified(scene, p);
            if (opts.quantize) {
                RgbBuffer q = f.pixels();
                for (double& v : q.data()) v = adc_quantize(v, params.adc_bits);
                f = LdrImage(std::move(q), p.c, evs[i]);
            }
            frames.push_back(f.with_exposure(p.c, evs[i]));
        }
    }
    return frames;
}

Bracket make_bracket(const HdrImage& hdr, const std::vector<double>& evs, const SensorParams& params,
                     std::uint64_t seed, const BracketOptions& opts) {
    return Bracket(simulate_frames(hdr, evs, params, seed, opts));
}

HdrImage synthetic_scene(int width, int height, std::uint64_t seed, double median_irradiance) {
    if (width < LdrImage::kMinSide || height < LdrImage::kMinSide) throw_usage("synthetic_scene: image too small");
    if (!(median_irradiance > 0.0)) throw_usage("synthetic_scene: median irradiance must be positive");
    std::mt19937_64 rng(mix_seed(seed, 0x5ce9e));
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // Log2 irradiance of a tilted backdrop, about five stops across the frame.
    const double gx = 5.0 * (u(rng) - 0.5), gy = 5.0 * (u(rng) - 0.5);
    const double fx = 2.0 + 4.0 * u(rng), fy = 2.0 + 4.0 * u(rng);
    std::vector<double> log_lum(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double nx = static_cast<double>(x) / width, ny = static_cast<double>(y) / height;
            log_lum[static_cast<std::size_t>(y) * width + x] =
                gx * (nx - 0.5) + gy * (ny - 0.5) + 0.4 * std::sin(6.2831853 * fx * nx) * std::cos(6.2831853 * fy * ny);
        }

    RgbBuffer px(width, height);
    std::array<double, 3> tint{1.0, 1.0, 1.0};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) px(x, y, c) = std::exp2(log_lum[static_cast<std::size_t>(y) * width + x]) * tint[c];

    const int patches = 6 + static_cast<int>(u(rng) * 4.0);
    for (int k = 0; k < patches; ++k) {
        const bool emitter = k < 2;
        const double level = emitter ? std::exp2(3.0 + 2.0 * u(rng)) : std::exp2(-5.0 + 8.0 * u(rng));
        for (double& t : tint) t = 0.6 + 0.8 * u(rng);
        const int pw = std::max(2, static_cast<int>(width * (0.08 + 0.2 * u(rng))));
        const int ph = std::max(2, static_cast<int>(height * (0.08 + 0.2 * u(rng))));
        const int x0 = static_cast<int>((width - pw) * u(rng)), y0 = static_cast<int>((height - ph) * u(rng));
        const bool disc = u(rng) < 0.5;
        const double stripes = 1.0 + 5.0 * u(rng);
        for (int y = y0; y < y0 + ph; ++y)
            for (int x = x0; x < x0 + pw; ++x) {
                if (disc) {
                    const double rx = (x - x0 - 0.5 * pw) / (0.5 * pw), ry = (y - y0 - 0.5 * ph) / (0.5 * ph);
                    if (rx * rx + ry * ry > 1.0) continue;
                }
                const double texture = 1.0 + 0.3 * std::sin(6.2831853 * stripes * (x - x0) / pw);
                for (int c = 0; c < 3; ++c) px(x, y, c) = level * tint[c] * texture;
            }
    }

    Plane lum = luma(px);
    std::vector<double> sorted(lum.data().begin(), lum.data().end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double scale = median_irradiance / sorted[sorted.size() / 2];
    for (double& v : px.data()) v *= scale;
    return HdrImage(std::move(px));
}

}  // namespace ihdr
