#pragma once

#include <cstdint>
#include <vector>

#include "ihdr/image.hpp"
#include "ihdr/nn/parameters.hpp"
#include "ihdr/nn/tape.hpp"
#include "ihdr/sensor.hpp"

namespace ihdr {

inline constexpr double kDefaultMu = 5000.0;

/// log(1 + μh) / log(1 + μ). Inputs are expected in [0,1].
double mu_law(double h, double mu = kDefaultMu);
double mu_law_inverse(double m, double mu = kDefaultMu);
RgbBuffer mu_law(const RgbBuffer& image, double mu = kDefaultMu);

/// T = clamp((c·H)^(1/γ), 0, 1) with exposure_time = c.
LdrImage physics_tonemap(const HdrImage& hdr, const SensorParams& params);

enum class ToneBackend { Analytic, Learned };

/// HDR → LDR-domain mapper used between fusion steps.
///
/// The learned backend predicts a bounded correction on top of the physics
/// map: out = clamp(T0 + f(T0), 0, 1) with T0 = physics_tonemap(H) and f a
/// 3-layer convolutional net (3×3 conv to 16, tanh, 1×1 to 16, tanh, 1×1 to 3).
struct ToneNetModel {
    ToneBackend backend = ToneBackend::Analytic;
    SensorParams anchor;
    nn::ParameterSet params;  // empty for the analytic backend

    static ToneNetModel analytic(const SensorParams& anchor = {});
    static ToneNetModel learned(const SensorParams& anchor, std::uint64_t seed);

    std::size_t parameter_count() const { return params.size(); }
};

/// Records the mapper on a tape. `hdr` is N×3×H×W.
nn::Var tonenet_forward(nn::Tape& t, nn::Var hdr, ToneNetModel& model);

/// Output carries exposure_time = c so pseudo_hdr inverts it on the unclipped
/// range.
LdrImage tonenet_apply(const HdrImage& hdr, const ToneNetModel& model);

struct ToneNetTraining {
    int steps = 300;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

/// Fits the learned backend to the physics map on the given scenes; returns
/// the per-step mean absolute error.
std::vector<double> train_tonenet(ToneNetModel& model, const std::vector<HdrImage>& scenes,
                                  const ToneNetTraining& cfg = {});

}  // namespace ihdr
