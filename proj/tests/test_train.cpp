#include <gtest/gtest.h>

#include "ihdr/error.hpp"
#include "ihdr/fusion/train.hpp"
#include "ihdr/nn/optim.hpp"
#include "support.hpp"

using namespace ihdr;
using namespace ihdr::fusion;

namespace {

HdrImage flat_hdr(double v, int side = 8) { return HdrImage(test::filled(side, side, v, v, v)); }
LdrImage flat_ldr(double v, int side = 8) { return LdrImage(test::filled(side, side, v, v, v), 1.0); }

/// Small static pair with its irradiance; everything stays unclipped.
TrainSample static_sample(int side, std::uint64_t seed) {
    const SensorParams p;
    const HdrImage gt(test::noise(side, side, seed, 0.01, 0.2));
    BracketOptions o;
    o.model = SimulationModel::Simplified;
    const auto frames = simulate_frames(gt, {0.0, -1.0}, p, seed, o);
    return {frames[0], frames[1], gt};
}

TrainConfig short_run(int steps) {
    TrainConfig cfg;
    cfg.patch = 16;
    cfg.steps = steps;
    cfg.lr_init = 1e-3;
    return cfg;
}

}  // namespace

TEST(Loss, ZeroAtTruth) {
    const HdrImage h(test::noise(8, 8, 3, 0.0, 3.0));
    const LdrImage t(test::noise(8, 8, 4), 1.0);
    EXPECT_EQ(fusion_loss(h, h, t, t, TrainConfig{}), 0.0);
}

TEST(Loss, LambdaZeroKeepsOnlyMuTerm) {
    const HdrImage a(test::noise(8, 8, 1, 0.0, 2.0)), b(test::noise(8, 8, 2, 0.0, 2.0));
    TrainConfig cfg;
    cfg.lambda = 0.0;
    const double s = b.max_value();
    double expected = 0.0;
    for (std::size_t i = 0; i < a.pixels().size(); ++i)
        expected += std::abs(mu_law(a.pixels().data()[i] / s) - mu_law(b.pixels().data()[i] / s));
    expected /= static_cast<double>(a.pixels().size());
    EXPECT_NEAR(fusion_loss(a, b, flat_ldr(0.0), flat_ldr(1.0), cfg), expected, 1e-15);
}

TEST(Loss, ConstructedCaseIsPointOneTwo) {
    // |M(ĥ/s) − M(h/s)| ≡ 0.1 with s = h, |T̂ − T| ≡ 0.2, λ = 0.1.
    const double h = 3.0;
    const HdrImage gt = flat_hdr(h);
    const HdrImage est = flat_hdr(h * mu_law_inverse(0.9));
    EXPECT_NEAR(fusion_loss(est, gt, flat_ldr(0.7), flat_ldr(0.5), TrainConfig{}), 0.12, 1e-12);
}

TEST(Loss, ZeroTruthUsesUnitNormaliser) {
    const HdrImage gt(RgbBuffer(8, 8));
    TrainConfig cfg;
    cfg.lambda = 0.0;
    EXPECT_NEAR(fusion_loss(flat_hdr(0.5), gt, flat_ldr(0.0), flat_ldr(0.0), cfg), mu_law(0.5), 1e-14);
}

TEST(Loss, ShapeMismatchIsRejected) {
    EXPECT_THROW(fusion_loss(flat_hdr(1, 8), flat_hdr(1, 4), flat_ldr(0, 8), flat_ldr(0, 8), TrainConfig{}), Error);
}

TEST(Loss, TapeMatchesImageVersion) {
    const HdrImage est(test::noise(8, 8, 5, 0.01, 0.3)), gt(test::noise(8, 8, 6, 0.01, 0.3));
    ToneNetModel tn = ToneNetModel::analytic();
    const TrainConfig cfg;
    nn::Tape t;
    const nn::Var loss = fusion_loss(t, t.input(nn::Tensor4::from_rgb(est.pixels())), gt, tn, cfg);
    const double expected =
        fusion_loss(est, gt, physics_tonemap(est, tn.anchor), physics_tonemap(gt, tn.anchor), cfg);
    EXPECT_NEAR(t.value(loss)[0], expected, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
    const TrainSample s = static_sample(16, 3);
    FusionModel m = FusionModel::create({}, 7);
    ToneNetModel tn = ToneNetModel::analytic();
    const TrainConfig cfg;
    const FusionInputs in = make_fusion_inputs(make_side_info(s.ref, s.nonref), m.config.levels());
    const GradientResult g = compute_gradient(m, in, s.ground_truth, tn, cfg);
    ASSERT_EQ(g.grads.size(), m.params.size());
    std::mt19937_64 rng(11);
    const double h = 1e-4;
    for (int k = 0; k < 12; ++k) {
        const std::size_t i = rng() % m.params.size();
        const double v = m.params.values()[i];
        m.params.values()[i] = v + h;
        const double lp = compute_gradient(m, in, s.ground_truth, tn, cfg).loss;
        m.params.values()[i] = v - h;
        const double lm = compute_gradient(m, in, s.ground_truth, tn, cfg).loss;
        m.params.values()[i] = v;
        const double fd = (lp - lm) / (2 * h);
        EXPECT_LE(std::abs(g.grads[i] - fd), 1e-4 * std::max({std::abs(g.grads[i]), std::abs(fd), 1e-8}))
            << m.params.size() << " params, index " << i;
    }
}

TEST(TrainConfig, ValidationRejectsBadValues) {
    EXPECT_NO_THROW(TrainConfig{}.validate());
    TrainConfig c;
    c.lr_init = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.batch = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Train, ScheduleEndpoints) {
    FusionModel m = FusionModel::create({}, 1);
    ToneNetModel tn = ToneNetModel::analytic();
    TrainConfig cfg = short_run(6);
    cfg.lr_init = 2e-4;
    const TrainResult r = train(m, {static_sample(16, 1)}, cfg, tn);
    ASSERT_EQ(r.lr_history.size(), 6u);
    EXPECT_DOUBLE_EQ(r.lr_history.front(), 2e-4);
    EXPECT_NEAR(r.lr_history.back(), 1e-6, 1e-9);
    for (std::size_t i = 1; i < r.lr_history.size(); ++i) EXPECT_LT(r.lr_history[i], r.lr_history[i - 1]);
    EXPECT_EQ(nn::cosine_lr(0, 10, 2e-4, 1e-6), 2e-4);
}

TEST(Train, SameSeedGivesBitIdenticalHistories) {
    const auto samples = synthetic_samples(2, 24, 9);
    auto run = [&] {
        FusionModel m = FusionModel::create({}, 4);
        ToneNetModel tn = ToneNetModel::analytic();
        TrainConfig cfg = short_run(8);
        cfg.seed = 5;
        return std::make_pair(train(m, samples, cfg, tn).loss_history,
                              std::vector<double>(m.params.values().begin(), m.params.values().end()));
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Train, LossDecreasesOnFixedPatch) {
    FusionModel m = FusionModel::create({}, 2);
    ToneNetModel tn = ToneNetModel::analytic();
    TrainConfig cfg = short_run(60);
    cfg.lr_init = 5e-3;
    cfg.grad_clip = 1.0;
    const TrainResult r = train(m, {static_sample(16, 4)}, cfg, tn);
    for (double v : r.loss_history) EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(r.loss_history.back(), 0.5 * r.loss_history.front());
}

TEST(Train, DivergenceIsReported) {
    FusionModel m = FusionModel::create({}, 2);
    ToneNetModel tn = ToneNetModel::analytic();
    TrainConfig cfg = short_run(3);
    cfg.divergence_limit = 1e-12;
    try {
        train(m, {static_sample(16, 4)}, cfg, tn);
        FAIL() << "expected divergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Internal);
        EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
    }
}

TEST(Train, RejectsBadInputs) {
    FusionModel m = FusionModel::create({}, 2);
    ToneNetModel tn = ToneNetModel::analytic();
    TrainConfig cfg = short_run(1);
    EXPECT_THROW(train(m, {}, cfg, tn), Error);
    cfg.patch = 18;  // not a multiple of the divisor
    EXPECT_THROW(train(m, {static_sample(24, 1)}, cfg, tn), Error);
    cfg.patch = 32;  // larger than the sample
    EXPECT_THROW(train(m, {static_sample(16, 1)}, cfg, tn), Error);
}

TEST(Train, LearnedToneNetIsOptimisedJointly) {
    FusionModel m = FusionModel::create({}, 2);
    ToneNetModel tn = ToneNetModel::learned(SensorParams{}, 3);
    const std::vector<double> before(tn.params.values().begin(), tn.params.values().end());
    train(m, {static_sample(16, 2)}, short_run(3), tn);
    const std::vector<double> after(tn.params.values().begin(), tn.params.values().end());
    EXPECT_NE(before, after);
}

TEST(SyntheticSamples, ShapesUnitsAndDeterminism) {
    const auto a = synthetic_samples(3, 32, 1), b = synthetic_samples(3, 32, 1);
    ASSERT_EQ(a.size(), 3u);
    const SensorParams p;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].ref.width(), 32);
        EXPECT_EQ(a[i].ground_truth.height(), 32);
        EXPECT_EQ(a[i].ref.exposure_time(), p.c);
        EXPECT_EQ(test::max_abs_diff(a[i].nonref.pixels(), b[i].nonref.pixels()), 0.0);
    }
    EXPECT_EQ(a[0].nonref.exposure_time(), p.c / 4);
    EXPECT_EQ(a[1].nonref.exposure_time(), p.c * 4);
    EXPECT_THROW(synthetic_samples(0, 32, 1), Error);
}
