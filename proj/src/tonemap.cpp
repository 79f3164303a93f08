#include "ihdr/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ihdr/error.hpp"
#include "ihdr/nn/ops.hpp"
#include "ihdr/nn/optim.hpp"

namespace ihdr {

double mu_law(double h, double mu) { return std::log1p(mu * h) / std::log1p(mu); }

double mu_law_inverse(double m, double mu) { return std::expm1(m * std::log1p(mu)) / mu; }

RgbBuffer mu_law(const RgbBuffer& image, double mu) {
    if (!(mu > 0.0)) throw_usage("mu_law: mu must be positive");
    RgbBuffer out = image;
    for (double& v : out.data()) v = mu_law(v, mu);
    return out;
}

LdrImage physics_tonemap(const HdrImage& hdr, const SensorParams& params) {
    return simulate_ldr_simplified(hdr, params);
}

ToneNetModel ToneNetModel::analytic(const SensorParams& anchor) {
    anchor.validate();
    ToneNetModel m;
    m.backend = ToneBackend::Analytic;
    m.anchor = anchor;
    return m;
}

ToneNetModel ToneNetModel::learned(const SensorParams& anchor, std::uint64_t seed) {
    anchor.validate();
    ToneNetModel m;
    m.backend = ToneBackend::Learned;
    m.anchor = anchor;
    auto& ps = m.params;
    std::mt19937_64 rng(mix_seed(seed, 0x70e));
    const int w1 = ps.add("tonenet.conv1.weight", {16, 3, 3, 3});
    ps.add("tonenet.conv1.bias", {1, 16, 1, 1});
    const int w2 = ps.add("tonenet.conv2.weight", {16, 16, 1, 1});
    ps.add("tonenet.conv2.bias", {1, 16, 1, 1});
    const int w3 = ps.add("tonenet.conv3.weight", {3, 16, 1, 1});
    ps.add("tonenet.conv3.bias", {1, 3, 1, 1});
    ps.init_normal(w1, std::sqrt(1.0 / 27.0), rng);
    ps.init_normal(w2, std::sqrt(1.0 / 16.0), rng);
    ps.init_normal(w3, 0.02, rng);
    return m;
}

namespace {

nn::Var pget(nn::Tape& t, nn::ParameterSet& ps, const char* name) {
    const auto idx = ps.find(name);
    if (!idx) throw_data(std::string("tonenet: missing parameter ") + name);
    return t.param(ps, *idx);
}

}  // namespace

nn::Var tonenet_forward(nn::Tape& t, nn::Var hdr, ToneNetModel& model) {
    nn::Tape::Scope scope(t, "tonenet");
    const nn::Var anchor = nn::power_tonemap(t, hdr, model.anchor.c, model.anchor.gamma);
    if (model.backend == ToneBackend::Analytic) return anchor;
    auto& ps = model.params;
    nn::Var h = nn::conv2d(t, anchor, pget(t, ps, "tonenet.conv1.weight"), pget(t, ps, "tonenet.conv1.bias"), "conv1");
    h = nn::tanh_act(t, h);
    h = nn::conv2d(t, h, pget(t, ps, "tonenet.conv2.weight"), pget(t, ps, "tonenet.conv2.bias"), "conv2");
    h = nn::tanh_act(t, h);
    h = nn::conv2d(t, h, pget(t, ps, "tonenet.conv3.weight"), pget(t, ps, "tonenet.conv3.bias"), "conv3");
    return nn::clamp_unit(t, nn::add(t, anchor, h));
}

LdrImage tonenet_apply(const HdrImage& hdr, const ToneNetModel& model) {
    if (model.backend == ToneBackend::Analytic) return physics_tonemap(hdr, model.anchor);
    nn::Tape tape(false);
    ToneNetModel& m = const_cast<ToneNetModel&>(model);  // forward only reads parameters
    const nn::Var out = tonenet_forward(tape, tape.input(nn::Tensor4::from_rgb(hdr.pixels())), m);
    return LdrImage(tape.value(out).to_rgb(), model.anchor.c, 0.0);
}

std::vector<double> train_tonenet(ToneNetModel& model, const std::vector<HdrImage>& scenes,
                                  const ToneNetTraining& cfg) {
    if (model.backend != ToneBackend::Learned) throw_usage("train_tonenet: analytic backend has no parameters");
    if (scenes.empty()) throw_usage("train_tonenet: no training scenes");
    nn::AdamW opt;
    opt.weight_decay = 0.0;
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        const HdrImage& scene = scenes[static_cast<std::size_t>(step) % scenes.size()];
        nn::Tape tape;
        const nn::Var h = tape.input(nn::Tensor4::from_rgb(scene.pixels()));
        const nn::Var target = tape.input(nn::Tensor4::from_rgb(physics_tonemap(scene, model.anchor).pixels()));
        const nn::Var loss = nn::l1_mean(tape, tonenet_forward(tape, h, model), target);
        model.params.zero_grad();
        tape.backward(loss);
        history.push_back(tape.value(loss)[0]);
        opt.step(model.params, cfg.lr);
    }
    return history;
}

}  // namespace ihdr
