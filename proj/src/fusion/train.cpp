#include "ihdr/fusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "ihdr/error.hpp"
#include "ihdr/nn/ops.hpp"
#include "ihdr/nn/optim.hpp"
#include "ihdr/sensor.hpp"

namespace ihdr::fusion {

void TrainConfig::validate() const {
    if (!(lr_final > 0.0 && lr_final <= lr_init)) throw_usage("train: need 0 < lr_final <= lr_init");
    if (!(lambda >= 0.0)) throw_usage("train: lambda must be >= 0");
    if (!(mu > 0.0)) throw_usage("train: mu must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw_usage("train: betas must lie in [0,1)");
    if (patch < 8) throw_usage("train: patch must be >= 8");
    if (epochs < 1 || batch < 1 || steps < 0) throw_usage("train: epochs and batch must be >= 1, steps >= 0");
    if (!(weight_decay >= 0.0)) throw_usage("train: weight_decay must be >= 0");
    if (!(grad_clip >= 0.0)) throw_usage("train: grad_clip must be >= 0");
}

namespace {

double normaliser(const HdrImage& h) {
    const double m = h.max_value();
    return m > 0.0 ? m : 1.0;
}

RgbBuffer crop(const RgbBuffer& src, int x0, int y0, int size) {
    RgbBuffer out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) out(x, y, c) = src(x0 + x, y0 + y, c);
    return out;
}

}  // namespace

double fusion_loss(const HdrImage& h_hat, const HdrImage& h_gt, const LdrImage& t_hat, const LdrImage& t_gt,
                   const TrainConfig& cfg) {
    if (!h_hat.pixels().same_shape(h_gt.pixels()) || !t_hat.pixels().same_shape(t_gt.pixels()) ||
        !h_hat.pixels().same_shape(t_hat.pixels()))
        throw_usage("loss: shape mismatch");
    const double s = normaliser(h_gt);
    const auto a = h_hat.pixels().data(), b = h_gt.pixels().data();
    const auto ta = t_hat.pixels().data(), tb = t_gt.pixels().data();
    double mu_term = 0.0, map_term = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mu_term += std::abs(mu_law(a[i] / s, cfg.mu) - mu_law(b[i] / s, cfg.mu));
        map_term += std::abs(ta[i] - tb[i]);
    }
    const double n = static_cast<double>(a.size());
    return mu_term / n + cfg.lambda * map_term / n;
}

nn::Var fusion_loss(nn::Tape& t, nn::Var h_hat, const HdrImage& h_gt, ToneNetModel& tonenet, const TrainConfig& cfg) {
    nn::Tape::Scope scope(t, "loss");
    const double inv = 1.0 / normaliser(h_gt);
    const nn::Tensor4 gt = nn::Tensor4::from_rgb(h_gt.pixels());
    if (!(t.value(h_hat).shape() == gt.shape())) throw_usage("loss: shape mismatch");
    nn::Tensor4 mu_gt(gt.shape());
    for (std::size_t i = 0; i < gt.numel(); ++i) mu_gt[i] = mu_law(gt[i] * inv, cfg.mu);
    const nn::Tensor4 t_gt = nn::Tensor4::from_rgb(physics_tonemap(h_gt, tonenet.anchor).pixels());

    const nn::Var mu_hat = nn::mu_law(t, nn::scale(t, h_hat, inv), cfg.mu);
    const nn::Var rec = nn::l1_mean(t, mu_hat, t.input(mu_gt, "mu_gt"));
    const nn::Var t_hat = tonenet_forward(t, h_hat, tonenet);
    const nn::Var map = nn::l1_mean(t, t_hat, t.input(t_gt, "t_gt"));
    return nn::weighted_sum(t, rec, 1.0, map, cfg.lambda);
}

GradientResult compute_gradient(FusionModel& model, const FusionInputs& inputs, const HdrImage& h_gt,
                                ToneNetModel& tonenet, const TrainConfig& cfg) {
    nn::Tape tape;
    const nn::Var out = dihdr_forward(tape, model, inputs);
    const nn::Var loss = fusion_loss(tape, out, h_gt, tonenet, cfg);
    model.params.zero_grad();
    tonenet.params.zero_grad();
    tape.backward(loss);
    const auto g = model.params.grads();
    return {tape.value(loss)[0], std::vector<double>(g.begin(), g.end())};
}

TrainResult train(FusionModel& model, const std::vector<TrainSample>& samples, const TrainConfig& cfg,
                  ToneNetModel& tonenet) {
    cfg.validate();
    if (samples.empty()) throw_usage("train: empty dataset");
    const int div = model.config.divisor();
    if (cfg.patch % div != 0) throw_usage("train: patch must be divisible by " + std::to_string(div));
    for (const TrainSample& s : samples) {
        if (s.ref.width() < cfg.patch || s.ref.height() < cfg.patch)
            throw_usage("train: sample smaller than patch size " + std::to_string(cfg.patch));
        if (!s.ref.pixels().same_shape(s.nonref.pixels()) || !s.ref.pixels().same_shape(s.ground_truth.pixels()))
            throw_data("train: sample frames and ground truth differ in size");
    }

    const int n = static_cast<int>(samples.size());
    const int steps = cfg.steps > 0 ? cfg.steps : cfg.epochs * ((n + cfg.batch - 1) / cfg.batch);
    const bool learn_tone = tonenet.backend == ToneBackend::Learned;

    // Fixed crops when a sample is exactly patch-sized; otherwise a seeded
    // position per (step, slot).
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x7a1));
    std::vector<std::pair<FusionInputs, HdrImage>> cache;
    const auto prepare = [&](const TrainSample& s, int x0, int y0) {
        const RgbBuffer gt = crop(s.ground_truth.pixels(), x0, y0, cfg.patch);
        const LdrImage r(crop(s.ref.pixels(), x0, y0, cfg.patch), s.ref.exposure_time(), s.ref.ev());
        const LdrImage nr(crop(s.nonref.pixels(), x0, y0, cfg.patch), s.nonref.exposure_time(), s.nonref.ev());
        return std::make_pair(make_fusion_inputs(make_side_info(r, nr), model.config.levels()), HdrImage(gt));
    };
    const bool all_exact = std::all_of(samples.begin(), samples.end(), [&](const TrainSample& s) {
        return s.ref.width() == cfg.patch && s.ref.height() == cfg.patch;
    });
    if (all_exact)
        for (const TrainSample& s : samples) cache.push_back(prepare(s, 0, 0));

    nn::AdamW opt;
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.weight_decay = cfg.weight_decay;
    nn::AdamW tone_opt = opt;

    TrainResult result;
    std::vector<double> acc(model.params.size()), tone_acc(tonenet.params.size());
    for (int step = 0; step < steps; ++step) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::fill(tone_acc.begin(), tone_acc.end(), 0.0);
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            const int idx = (step * cfg.batch + b) % n;
            std::optional<std::pair<FusionInputs, HdrImage>> fresh;
            const std::pair<FusionInputs, HdrImage>* item;
            if (all_exact) {
                item = &cache[static_cast<std::size_t>(idx)];
            } else {
                const TrainSample& s = samples[static_cast<std::size_t>(idx)];
                const int cells_x = (s.ref.width() - cfg.patch) / div + 1;
                const int cells_y = (s.ref.height() - cfg.patch) / div + 1;
                const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(cells_x)) * div;
                const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(cells_y)) * div;
                fresh.emplace(prepare(s, x0, y0));
                item = &*fresh;
            }
            const GradientResult g = compute_gradient(model, item->first, item->second, tonenet, cfg);
            if (!std::isfinite(g.loss) || g.loss > cfg.divergence_limit) {
                std::ostringstream msg;
                msg << "training diverged at step " << step << ": loss " << g.loss << " exceeds "
                    << cfg.divergence_limit;
                throw_internal(msg.str());
            }
            loss_sum += g.loss;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g.grads[i];
            if (learn_tone) {
                const auto tg = tonenet.params.grads();
                for (std::size_t i = 0; i < tone_acc.size(); ++i) tone_acc[i] += tg[i];
            }
        }
        double inv_b = 1.0 / cfg.batch;
        if (cfg.grad_clip > 0.0) {
            double sq = 0.0;
            for (double g : acc) sq += g * g;
            for (double g : tone_acc) sq += g * g;
            const double norm = std::sqrt(sq) * inv_b;
            if (norm > cfg.grad_clip) inv_b *= cfg.grad_clip / norm;
        }
        auto grads = model.params.grads();
        for (std::size_t i = 0; i < acc.size(); ++i) grads[i] = acc[i] * inv_b;
        const double lr = nn::cosine_lr(step, steps, cfg.lr_init, cfg.lr_final);
        opt.step(model.params, lr);
        if (learn_tone) {
            auto tg = tonenet.params.grads();
            for (std::size_t i = 0; i < tone_acc.size(); ++i) tg[i] = tone_acc[i] * inv_b;
            tone_opt.step(tonenet.params, lr);
        }
        result.loss_history.push_back(loss_sum * inv_b);
        result.lr_history.push_back(lr);
    }
    return result;
}

std::vector<TrainSample> synthetic_samples(int count, int size, std::uint64_t seed, const SensorParams& params) {
    if (count < 1) throw_usage("synthetic_samples: count must be >= 1");
    std::vector<TrainSample> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
        const HdrImage scene = synthetic_scene(size, size, s, 0.1);
        BracketOptions opts;
        opts.model = SimulationModel::Simplified;
        opts.quantize = true;
        MotionSpec motion;
        motion.width = motion.height = std::max(4, size / 4);
        motion.x = size / 4;
        motion.y = size / 3;
        motion.dx = std::max(1, size / 8);
        motion.irradiance = {0.05, 0.08, 0.12};
        opts.motion = motion;
        const double partner = (i % 2 == 0) ? -2.0 : 2.0;
        const std::vector<LdrImage> frames = simulate_frames(scene, {0.0, partner}, params, s, opts);
        out.push_back({frames[0], frames[1], scene_at(scene, motion, 0)});
    }
    return out;
}

}  // namespace ihdr::fusion
