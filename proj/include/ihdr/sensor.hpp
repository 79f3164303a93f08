#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ihdr/image.hpp"

namespace ihdr {

/// Physical camera constants. Irradiance H is expressed in units where
/// conversion_gain * full_well == 1 reaches the top ADC code; the defaults
/// keep that relation.
struct SensorParams {
    double conversion_gain = 1e-4;     // ξ, output units per electron
    double quantum_efficiency = 0.5;   // QE
    double dark_current = 1e-4;        // μ_dark, same units as H
    double read_noise = 3e-4;          // σ_read, output units
    double full_well = 10000.0;        // electrons
    int adc_bits = 12;
    double gamma = 2.2;
    double c = 4.5;                    // exposure scalar of the simplified model

    /// Throws Error(Usage) when a positivity/range constraint is violated.
    void validate() const;

    /// ξ·QE: the factor relating scene irradiance to pseudo-HDR units.
    double radiometric_gain() const { return conversion_gain * quantum_efficiency; }

    /// Exposure time at which the full model matches the simplified one.
    double base_exposure() const { return c / radiometric_gain(); }
};

enum class NoiseMode {
    Stochastic,     // Poisson shot noise + Gaussian read noise
    Deterministic,  // Poisson replaced by its mean, no read noise
};

/// Full sensor model: Poisson(t·QE·(H + μ_dark)) → clip at full well → ξ·e + read
/// noise → max(·,0)^(1/γ) → ADC. The RNG for each pixel is derived from
/// (seed, pixel index), so the output is independent of evaluation order.
LdrImage simulate_ldr(const HdrImage& hdr, double exposure_time, const SensorParams& params, std::uint64_t seed,
                      NoiseMode mode = NoiseMode::Stochastic, double ev = 0.0);

/// L = clamp((c·H)^(1/γ), 0, 1); the result carries exposure_time = c.
LdrImage simulate_ldr_simplified(const HdrImage& hdr, const SensorParams& params);

/// H = L^γ / c.
HdrImage invert_simplified(const LdrImage& ldr, const SensorParams& params);

/// Uniform quantisation of [0,1] to 2^bits codes, normalised back to [0,1].
double adc_quantize(double v, int bits);

/// A rectangle of constant irradiance pasted over the scene and translated by
/// (dx, dy) per frame step, relative to the anchor frame (EV closest to 0).
struct MotionSpec {
    int x = 0;
    int y = 0;
    int width = 16;
    int height = 16;
    std::array<double, 3> irradiance{0.2, 0.2, 0.2};
    int dx = 8;
    int dy = 0;
};

/// Scene with the motion layer displaced by `step` frame steps.
HdrImage scene_at(const HdrImage& hdr, const MotionSpec& motion, int step);

enum class SimulationModel {
    Full,        // simulate_ldr at t = base_exposure·2^EV
    Simplified,  // Eq.-5 style: L = clamp((c·2^EV·H)^(1/γ)), exposure_time = c·2^EV
};

struct BracketOptions {
    SimulationModel model = SimulationModel::Full;
    NoiseMode noise = NoiseMode::Stochastic;
    std::optional<double> base_exposure;  // defaults to params.base_exposure()
    bool quantize = false;                // Simplified model only: apply the ADC
    std::optional<MotionSpec> motion;
};

/// Index of the EV closest to zero (first on ties).
int anchor_index(const std::vector<double>& evs);

/// One frame per EV, in the given order. Frames carry radiometric exposure
/// times (t·ξ·QE for the full model, c·2^EV for the simplified one), so
/// pseudo_hdr of an unclipped frame lands in scene-irradiance units.
std::vector<LdrImage> simulate_frames(const HdrImage& hdr, const std::vector<double>& evs, const SensorParams& params,
                                      std::uint64_t seed, const BracketOptions& opts = {});

/// simulate_frames wrapped into a Bracket (requires at least two EVs).
Bracket make_bracket(const HdrImage& hdr, const std::vector<double>& evs, const SensorParams& params,
                     std::uint64_t seed, const BracketOptions& opts = {});

/// Procedural high-dynamic-range test scene: a graded backdrop, textured
/// patches spanning about ten stops, and a few bright emitters. Scaled so the
/// median luma equals `median_irradiance`.
HdrImage synthetic_scene(int width, int height, std::uint64_t seed, double median_irradiance = 0.1);

/// SplitMix64 finaliser used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ihdr
