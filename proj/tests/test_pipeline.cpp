#include <gtest/gtest.h>

#include "ihdr/error.hpp"
#include "ihdr/pipeline.hpp"
#include "ihdr/sensor.hpp"
#include "support.hpp"

using namespace ihdr;

namespace {

/// Records every call and delegates to the real components.
class CountingFuser : public Fuser {
public:
    HdrImage fuse(const SideInfoBundle& bundle) override {
        ++calls;
        exposures.push_back(bundle.ref_pseudo_hdr.max_value());
        return inner.fuse(bundle);
    }
    BaselineFuser inner;
    int calls = 0;
    std::vector<double> exposures;
};

class CountingMapper : public Mapper {
public:
    CountingMapper() : inner(model) {}
    LdrImage map(const HdrImage& hdr) override {
        ++calls;
        return inner.map(hdr);
    }
    ToneNetModel model = ToneNetModel::analytic();
    ToneNetMapper inner;
    int calls = 0;
};

std::vector<double> evs_for(int k) {
    switch (k) {
        case 2: return {0, -1};
        case 3: return {-1, 0, 1};
        case 5: return {-2, -1, 0, 1, 2};
        default: return {-4, -3, -2, -1, 0, 1, 2, 3, 4};
    }
}

Bracket static_bracket(const std::vector<double>& evs, int side = 32, std::optional<int> ref = std::nullopt,
                       double median = 0.1) {
    BracketOptions o;
    o.model = SimulationModel::Simplified;
    return Bracket(simulate_frames(synthetic_scene(side, side, 5, median), evs, SensorParams{}, 0, o), ref);
}

LdrImage flat(double l, double t = 1.0) { return LdrImage(test::filled(16, 16, l, l, l), t); }

}  // namespace

TEST(Reference, MiddleFrameOfNineFrameBracket) {
    // Scene scaled so the EV 0 frame sits at mid-gray.
    const Bracket b = static_bracket(evs_for(9), 32, std::nullopt, 0.04);
    EXPECT_EQ(select_reference(b), 4);
}

TEST(Reference, ManifestOverrideWins) {
    const Bracket b = static_bracket(evs_for(5), 32, 0);
    EXPECT_EQ(select_reference(b), 0);
    EXPECT_EQ(plan(b).reference_index, 0);
}

TEST(Reference, TieGoesToLowestIndex) {
    // Flat frames share sharpness; 0.4 and 0.6 are equally far from mid-gray.
    const Bracket b({flat(0.9), flat(0.6), flat(0.4)});
    EXPECT_EQ(select_reference(b), 1);
}

TEST(Reference, BlurredFrameIsSkipped) {
    LdrImage sharp(test::noise(16, 16, 3, 0.0, 1.0), 1.0);
    const Bracket b({flat(0.5), sharp, LdrImage(test::noise(16, 16, 4, 0.1, 0.9), 1.0)});
    // The flat frame is perfectly exposed but below the median sharpness.
    EXPECT_NE(select_reference(b), 0);
}

TEST(Plan, OrderByLuminanceDistance) {
    const Bracket b({flat(0.5), flat(0.3), flat(0.45), flat(0.8)}, 0);
    const FusionPlan p = plan(b);
    EXPECT_EQ(p.reference_index, 0);
    EXPECT_EQ(p.nonref_order, (std::vector<int>{2, 1, 3}));
}

TEST(Plan, EqualDistancesKeepIndexOrder) {
    const Bracket b({flat(0.7), flat(0.5), flat(0.3)}, 1);
    EXPECT_EQ(plan(b).nonref_order, (std::vector<int>{0, 2}));
}

TEST(Plan, RecordsBackends) {
    const FusionPlan p = plan(static_bracket({0, -1}), FuserBackend::Network, ToneBackend::Learned);
    EXPECT_EQ(p.fuser, FuserBackend::Network);
    EXPECT_EQ(p.mapper, ToneBackend::Learned);
}

TEST(IterativeFuse, CallCountsForEveryBracketSize) {
    for (int k : {2, 3, 5, 9}) {
        const Bracket b = static_bracket(evs_for(k), 16);
        CountingFuser f;
        CountingMapper m;
        const IterationResult r = iterative_fuse(b, plan(b), f, m);
        EXPECT_EQ(f.calls, k - 1);
        EXPECT_EQ(m.calls, k - 2);
        EXPECT_EQ(r.fusions, k - 1);
        EXPECT_EQ(r.mappings, k - 2);
    }
}

TEST(IterativeFuse, InvalidPlansAreUsageErrors) {
    const Bracket b = static_bracket(evs_for(3), 16);
    CountingFuser f;
    CountingMapper m;
    const auto expect_usage = [&](FusionPlan p) {
        try {
            iterative_fuse(b, p, f, m);
            ADD_FAILURE() << "plan accepted";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Usage);
        }
    };
    FusionPlan p = plan(b);
    p.nonref_order = {};
    expect_usage(p);
    p = plan(b);
    p.nonref_order = {p.nonref_order[0], p.nonref_order[0]};
    expect_usage(p);
    p = plan(b);
    p.nonref_order.pop_back();
    expect_usage(p);
    p = plan(b);
    p.reference_index = 7;
    expect_usage(p);
    EXPECT_EQ(f.calls, 0);
    EXPECT_THROW(select_reference(Bracket({flat(0.5)})), Error);
}

TEST(IterativeFuse, StaticPairRecoversSceneInOwnUnits) {
    // Full-model frames carry t·ξ·QE exposures; the result must come back in
    // the scene's units regardless of the internal rescale.
    SensorParams p;
    p.read_noise = 0.0;
    p.dark_current = 0.0;
    const HdrImage gt(test::noise(16, 16, 2, 0.01, 0.1));
    BracketOptions o;
    o.noise = NoiseMode::Deterministic;
    o.quantize = false;
    const Bracket b(simulate_frames(gt, {0.0, -1.0}, p, 0, o));
    CountingFuser f;
    CountingMapper m;
    const IterationResult r = iterative_fuse(b, plan(b), f, m);
    for (std::size_t i = 0; i < gt.pixels().size(); ++i)
        EXPECT_NEAR(r.hdr.pixels().data()[i], gt.pixels().data()[i], 1e-3 * gt.pixels().data()[i]);
}

TEST(IterativeFuse, ExposureScaleDoesNotChangeResultShape) {
    // Relabelling every exposure by a common factor only rescales the output.
    const Bracket b = static_bracket(evs_for(3), 16);
    std::vector<LdrImage> frames;
    for (const LdrImage& f : b.frames()) frames.push_back(f.with_exposure(f.exposure_time() * 8.0, f.ev()));
    const Bracket b8(frames);
    CountingFuser f1, f2;
    CountingMapper m1, m2;
    const HdrImage a = iterative_fuse(b, plan(b), f1, m1).hdr;
    const HdrImage c = iterative_fuse(b8, plan(b8), f2, m2).hdr;
    for (std::size_t i = 0; i < a.pixels().size(); ++i)
        EXPECT_NEAR(c.pixels().data()[i] * 8.0, a.pixels().data()[i], 1e-12 * std::max(1.0, a.pixels().data()[i]));
}

TEST(IterativeFuse, DumpsPerStepFiles) {
    const test::TempDir dir("dump");
    const Bracket b = static_bracket(evs_for(3), 16);
    CountingFuser f;
    CountingMapper m;
    IterationOptions opts;
    opts.dump_dir = dir / "steps";
    iterative_fuse(b, plan(b), f, m, opts);
    for (const char* name : {"step_0_fused.pfm", "step_0_diff.png", "step_0_mapped.png", "step_1_fused.pfm",
                             "step_1_diff.png"})
        EXPECT_TRUE(std::filesystem::exists(dir / "steps" / name)) << name;
    EXPECT_FALSE(std::filesystem::exists(dir / "steps" / "step_1_mapped.png"));
}

TEST(IterativeFuse, StaticTrendImprovesWithMoreFrames) {
    const SensorParams p;
    const HdrImage scene = synthetic_scene(64, 64, 1, 0.1);
    double prev = -1.0, first = -1.0;
    for (int k : {3, 5, 9}) {
        BracketOptions o;
        o.model = SimulationModel::Simplified;
        o.quantize = false;
        const std::vector<double> evs = evs_for(k);
        const Bracket b(simulate_frames(scene, evs, p, 0, o), anchor_index(evs));
        CountingFuser f;
        CountingMapper m;
        const HdrImage out = iterative_fuse(b, plan(b), f, m).hdr;
        double se = 0.0;
        for (std::size_t i = 0; i < out.pixels().size(); ++i) {
            const double d = out.pixels().data()[i] - scene.pixels().data()[i];
            se += d * d;
        }
        const double err = se / out.pixels().size();
        if (prev >= 0.0) {
            EXPECT_LE(err, prev * (1 + 1e-9));
        } else {
            first = err;
        }
        prev = err;
    }
    EXPECT_LT(prev, 0.5 * first);
}
