#include "ihdr/fusion/model.hpp"

#include <algorithm>
#include <cmath>

#include "ihdr/error.hpp"
#include "ihdr/sensor.hpp"

namespace ihdr::fusion {

namespace {

const char* kBranch[2] = {"ref", "nonref"};

std::string level_name(const std::string& base, int l) { return base + ".l" + std::to_string(l); }

void add_conv(nn::ParameterSet& ps, const std::string& name, int cout, int cin, int k, std::mt19937_64& rng) {
    ps.init_normal(ps.add(name + ".weight", {cout, cin, k, k}), std::sqrt(1.0 / (cin * k * k)), rng);
    ps.add(name + ".bias", {1, cout, 1, 1});
}

nn::Var p(nn::Tape& t, nn::ParameterSet& ps, const std::string& name) {
    const auto idx = ps.find(name);
    if (!idx) throw_data("missing parameter " + name);
    return t.param(ps, *idx);
}

nn::Var conv(nn::Tape& t, nn::ParameterSet& ps, nn::Var x, const std::string& name) {
    return nn::conv2d(t, x, p(t, ps, name + ".weight"), p(t, ps, name + ".bias"), name);
}

nn::Tensor4 plane_tensor(const Plane& plane) { return nn::Tensor4::from_plane(plane); }

}  // namespace

void FusionConfig::validate() const {
    if (channels.empty() || channels.size() > 6) throw_usage("fusion config: need 1..6 levels");
    for (int c : channels)
        if (c < 1 || c > 256) throw_usage("fusion config: channel widths must lie in [1,256]");
    if (!(output_beta > 0.0)) throw_usage("fusion config: output_beta must be positive");
    if (ffn_expansion < 0 || ffn_expansion > 8) throw_usage("fusion config: ffn_expansion must lie in [0,8]");
}

FusionModel FusionModel::create(const FusionConfig& config, std::uint64_t seed) {
    config.validate();
    FusionModel m;
    m.config = config;
    auto& ps = m.params;
    std::mt19937_64 rng(mix_seed(seed, 0xd1d));
    const auto& ch = config.channels;
    const int L = config.levels();

    for (int b = 0; b < 2; ++b) {
        const std::string base = std::string("enc.") + kBranch[b];
        for (int l = 0; l < L; ++l) {
            const std::string lv = level_name(base, l);
            if (l == 0)
                add_conv(ps, lv + ".stem", ch[0], 6, 3, rng);
            else
                add_conv(ps, lv + ".down", ch[l], ch[l - 1], 1, rng);
            (b == 0 ? m.enc_ref : m.enc_nonref).push_back(register_block(ps, lv, ch[l], 1, config.ffn_expansion, rng));
        }
    }
    for (int l = 0; l < L; ++l) add_conv(ps, level_name("merge", l), ch[l], 2 * ch[l], 1, rng);
    m.dec.resize(static_cast<std::size_t>(L));
    m.dec[L - 1] = register_block(ps, level_name("dec", L - 1), ch[L - 1], 1, config.ffn_expansion, rng);
    for (int l = L - 2; l >= 0; --l) {
        add_conv(ps, level_name("dec", l) + ".up", ch[l], ch[l + 1], 1, rng);
        add_conv(ps, level_name("dec", l) + ".fuse", ch[l], 2 * ch[l], 1, rng);
        m.dec[l] = register_block(ps, level_name("dec", l), ch[l], 1, config.ffn_expansion, rng);
    }
    m.refine = register_block(ps, "refine", ch[0], 0, config.ffn_expansion, rng);

    add_conv(ps, "head", 3, ch[0] + 6, 1, rng);
    return m;
}

FusionInputs make_fusion_inputs(const SideInfoBundle& bundle, int levels) {
    const int div = 1 << (levels - 1);
    if (bundle.width() % div != 0 || bundle.height() % div != 0)
        throw_usage("fusion input " + std::to_string(bundle.width()) + "x" + std::to_string(bundle.height()) +
                    " not divisible by " + std::to_string(div));
    const auto concat6 = [](const LdrImage& l, const HdrImage& h) {
        const nn::Tensor4 a = nn::Tensor4::from_rgb(l.pixels());
        const nn::Tensor4 b = nn::Tensor4::from_rgb(h.pixels());
        nn::Tensor4 out(nn::Shape{1, 6, a.shape().h, a.shape().w});
        const std::size_t P = a.shape().plane();
        for (int c = 0; c < 3; ++c) {
            std::copy(a.plane(0, c), a.plane(0, c) + P, out.plane(0, c));
            std::copy(b.plane(0, c), b.plane(0, c) + P, out.plane(0, c + 3));
        }
        return out;
    };
    FusionInputs in;
    in.ref = concat6(bundle.ref_ldr, bundle.ref_pseudo_hdr);
    in.nonref = concat6(bundle.nonref_ldr, bundle.nonref_pseudo_hdr);
    in.ref_hdr = nn::Tensor4::from_rgb(bundle.ref_pseudo_hdr.pixels());
    in.nonref_hdr = nn::Tensor4::from_rgb(bundle.nonref_pseudo_hdr.pixels());
    for (const Plane& s : multiscale_st(bundle.st, levels)) in.st_pyramid.push_back(plane_tensor(s));
    Plane d = bundle.diff.mask;
    for (int l = 0; l < levels; ++l) {
        if (l > 0) d = max_pool2(d);
        in.diff_pyramid.push_back(plane_tensor(d));
    }
    return in;
}

nn::Var dihdr_forward(nn::Tape& t, FusionModel& model, const FusionInputs& in) {
    auto& ps = model.params;
    const int L = model.config.levels();
    if (static_cast<int>(in.st_pyramid.size()) != L || static_cast<int>(in.diff_pyramid.size()) != L)
        throw_usage("dihdr_forward: side-information pyramid depth does not match the model");
    if (in.width() % model.config.divisor() != 0 || in.height() % model.config.divisor() != 0)
        throw_usage("dihdr_forward: dimensions not divisible by " + std::to_string(model.config.divisor()));

    std::vector<nn::Var> st(static_cast<std::size_t>(L)), diff(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        st[l] = t.input(in.st_pyramid[l], "st");
        diff[l] = t.input(in.diff_pyramid[l], "diff");
    }

    std::vector<nn::Var> feats[2];
    for (int b = 0; b < 2; ++b) {
        const std::string base = std::string("enc.") + kBranch[b];
        const auto& blocks = b == 0 ? model.enc_ref : model.enc_nonref;
        const auto& prior = b == 0 ? st : diff;
        nn::Var x = t.input(b == 0 ? in.ref : in.nonref, std::string("in.") + kBranch[b]);
        for (int l = 0; l < L; ++l) {
            const std::string lv = level_name(base, l);
            x = l == 0 ? conv(t, ps, x, lv + ".stem") : conv(t, ps, nn::avg_pool2(t, x), lv + ".down");
            x = block_forward(t, ps, blocks[l], x, prior[l]);
            feats[b].push_back(x);
        }
    }
    std::vector<nn::Var> merged;
    for (int l = 0; l < L; ++l)
        merged.push_back(conv(t, ps, nn::concat_channels(t, {feats[0][l], feats[1][l]}), level_name("merge", l)));

    nn::Var d = block_forward(t, ps, model.dec[L - 1], merged[L - 1], st[L - 1]);
    for (int l = L - 2; l >= 0; --l) {
        const std::string lv = level_name("dec", l);
        const nn::Var up = conv(t, ps, nn::upsample_nearest2(t, d), lv + ".up");
        const nn::Var f = conv(t, ps, nn::concat_channels(t, {up, merged[l]}), lv + ".fuse");
        d = block_forward(t, ps, model.dec[l], f, st[l]);
    }
    d = block_forward(t, ps, model.refine, d, std::nullopt);

    const nn::Var hr = t.input(in.ref_hdr, "h_ref");
    const nn::Var hn = t.input(in.nonref_hdr, "h_nonref");
    const nn::Var head = conv(t, ps, nn::concat_channels(t, {d, hr, hn}), "head");
    return nn::softplus(t, head, model.config.output_beta);
}

HdrImage dihdr_forward(const SideInfoBundle& bundle, FusionModel& model) {
    const FusionInputs in = make_fusion_inputs(bundle, model.config.levels());
    nn::Tape tape(false);
    const nn::Var out = dihdr_forward(tape, model, in);
    return HdrImage(tape.value(out).to_rgb());
}

std::uint64_t layer_macs(const LayerSpec& s) {
    const std::uint64_t hw = static_cast<std::uint64_t>(s.height) * static_cast<std::uint64_t>(s.width);
    const std::uint64_t k2 = static_cast<std::uint64_t>(s.kernel) * static_cast<std::uint64_t>(s.kernel);
    switch (s.kind) {
        case LayerKind::Conv: return hw * k2 * s.in_channels * s.out_channels;
        case LayerKind::Depthwise: return hw * k2 * s.in_channels;
        case LayerKind::Attention: return 2 * hw * s.in_channels * s.in_channels;
    }
    return 0;
}

std::vector<LayerSpec> architecture_layers(const FusionConfig& config, int height, int width) {
    config.validate();
    const int div = config.divisor();
    if (height <= 0 || width <= 0 || height % div != 0 || width % div != 0)
        throw_usage("count_macs: " + std::to_string(width) + "x" + std::to_string(height) + " not divisible by " +
                    std::to_string(div));
    const auto& ch = config.channels;
    const int L = config.levels();
    std::vector<LayerSpec> out;
    const auto conv = [&](const std::string& name, int l, int k, int cin, int cout) {
        out.push_back({name, LayerKind::Conv, height >> l, width >> l, k, cin, cout});
    };
    const auto scat = [&](const std::string& name, int l, int c, int prior_channels) {
        const int h = height >> l, w = width >> l;
        if (prior_channels > 0) out.push_back({name + ".prior", LayerKind::Conv, h, w, 1, prior_channels, c});
        out.push_back({name + ".qkv", LayerKind::Conv, h, w, 1, c, 3 * c});
        out.push_back({name + ".dw", LayerKind::Depthwise, h, w, 3, 3 * c, 3 * c});
        out.push_back({name + ".attention", LayerKind::Attention, h, w, 1, c, c});
        out.push_back({name + ".proj", LayerKind::Conv, h, w, 1, c, c});
    };
    const auto ffn = [&](const std::string& name, int l, int c) {
        if (config.ffn_expansion == 0) return;
        const int h = height >> l, w = width >> l, e = config.ffn_expansion * c;
        out.push_back({name + ".in", LayerKind::Conv, h, w, 1, c, 2 * e});
        out.push_back({name + ".dw", LayerKind::Depthwise, h, w, 3, 2 * e, 2 * e});
        out.push_back({name + ".out", LayerKind::Conv, h, w, 1, e, c});
    };
    const auto block = [&](const std::string& name, int l, int c, int prior_channels) {
        scat(name + ".scat", l, c, prior_channels);
        ffn(name + ".ffn", l, c);
    };
    for (int b = 0; b < 2; ++b) {
        const std::string base = std::string("enc.") + kBranch[b];
        for (int l = 0; l < L; ++l) {
            const std::string lv = level_name(base, l);
            if (l == 0)
                conv(lv + ".stem", 0, 3, 6, ch[0]);
            else
                conv(lv + ".down", l, 1, ch[l - 1], ch[l]);
            block(lv, l, ch[l], 1);
        }
    }
    for (int l = 0; l < L; ++l) conv(level_name("merge", l), l, 1, 2 * ch[l], ch[l]);
    block(level_name("dec", L - 1), L - 1, ch[L - 1], 1);
    for (int l = L - 2; l >= 0; --l) {
        const std::string lv = level_name("dec", l);
        conv(lv + ".up", l, 1, ch[l + 1], ch[l]);
        conv(lv + ".fuse", l, 1, 2 * ch[l], ch[l]);
        block(lv, l, ch[l], 1);
    }
    block("refine", 0, ch[0], 0);
    conv("head", 0, 1, ch[0] + 6, 3);
    return out;
}

MacTable count_macs(const FusionConfig& config, int height, int width) {
    MacTable table;
    for (const LayerSpec& s : architecture_layers(config, height, width)) {
        const std::uint64_t m = layer_macs(s);
        table.layers.emplace_back(s.name, m);
        table.total += m;
    }
    return table;
}

HdrImage baseline_fuse(const SideInfoBundle& bundle, const BaselineOptions& opts) {
    const int w = bundle.width(), h = bundle.height();
    const RgbBuffer& lr = bundle.ref_ldr.pixels();
    const RgbBuffer& ln = bundle.nonref_ldr.pixels();
    const RgbBuffer& hr = bundle.ref_pseudo_hdr.pixels();
    const RgbBuffer& hn = bundle.nonref_pseudo_hdr.pixels();
    const Plane yr = luma(lr), yn = luma(ln);
    const double inv2s2 = 1.0 / (2.0 * opts.sigma * opts.sigma);
    const auto weight = [&](const RgbBuffer& l, const Plane& y, int x, int yy) {
        if (std::max({l(x, yy, 0), l(x, yy, 1), l(x, yy, 2)}) >= opts.saturation_level) return 0.0;
        const double d = y(x, yy) - 0.5;
        return std::exp(-d * d * inv2s2);
    };
    // Pseudo-HDR noise scales with 1/t, so longer exposures earn more weight.
    const double tr = opts.exposure_weighting ? bundle.ref_ldr.exposure_time() : 1.0;
    const double tn = opts.exposure_weighting ? bundle.nonref_ldr.exposure_time() : 1.0;
    RgbBuffer out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (bundle.diff.mask(x, y) >= 0.5) {
                for (int c = 0; c < 3; ++c) out(x, y, c) = hr(x, y, c);
                continue;
            }
            const double wr = weight(lr, yr, x, y) * tr, wn = weight(ln, yn, x, y) * tn;
            for (int c = 0; c < 3; ++c) {
                // Both clipped: the larger pseudo-HDR is the tighter lower bound.
                out(x, y, c) = wr + wn > 0.0 ? (wr * hr(x, y, c) + wn * hn(x, y, c)) / (wr + wn)
                                             : std::max(hr(x, y, c), hn(x, y, c));
            }
        }
    return HdrImage(std::move(out));
}

}  // namespace ihdr::fusion
