#pragma once

#include <cstdint>
#include <vector>

#include "ihdr/fusion/model.hpp"
#include "ihdr/tonemap.hpp"

namespace ihdr::fusion {

struct TrainConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr_init = 2e-4;
    double lr_final = 1e-6;
    double lambda = 0.1;  // weight of the mapping term
    double mu = kDefaultMu;
    int patch = 32;
    int epochs = 1;
    int batch = 1;
    int steps = 0;  // 0: epochs × ceil(samples / batch)
    std::uint64_t seed = 0;
    double weight_decay = 1e-4;
    double divergence_limit = 1e6;
    double grad_clip = 0.0;  // > 0: rescale the batch gradient to at most this L2 norm

    void validate() const;
};

/// One (reference, non-reference) pair with its ground-truth irradiance in
/// the same units as the pair's pseudo-HDRs.
struct TrainSample {
    LdrImage ref;
    LdrImage nonref;
    HdrImage ground_truth;
};

/// mean|M(ĥ/s) − M(h/s)| + λ·mean|T̂ − T| with s = max(h) (1 when h ≡ 0).
double fusion_loss(const HdrImage& h_hat, const HdrImage& h_gt, const LdrImage& t_hat, const LdrImage& t_gt,
                   const TrainConfig& cfg);

/// Same objective recorded on a tape; T̂ is the mapper applied to ĥ and T the
/// physics map of h.
nn::Var fusion_loss(nn::Tape& t, nn::Var h_hat, const HdrImage& h_gt, ToneNetModel& tonenet, const TrainConfig& cfg);

struct GradientResult {
    double loss = 0.0;
    std::vector<double> grads;  // aligned with model.params.values()
};

/// Loss and its gradient w.r.t. every fusion parameter at the current values.
GradientResult compute_gradient(FusionModel& model, const FusionInputs& inputs, const HdrImage& h_gt,
                                ToneNetModel& tonenet, const TrainConfig& cfg);

struct TrainResult {
    std::vector<double> loss_history;  // one entry per optimiser step
    std::vector<double> lr_history;
};

/// AdamW + cosine annealing. Samples larger than cfg.patch are cropped at
/// seeded positions; side information is rebuilt per crop. A learned
/// ToneNet is optimised jointly.
TrainResult train(FusionModel& model, const std::vector<TrainSample>& samples, const TrainConfig& cfg,
                  ToneNetModel& tonenet);

/// Synthetic two-frame training pairs (EV 0 reference, EV ±2 partner,
/// moving patch) from procedural scenes, in simplified-model units.
std::vector<TrainSample> synthetic_samples(int count, int size, std::uint64_t seed, const SensorParams& params = {});

}  // namespace ihdr::fusion
