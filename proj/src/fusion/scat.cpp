#include "ihdr/fusion/scat.hpp"

#include <cmath>

#include "ihdr/error.hpp"

namespace ihdr::fusion {

namespace {

nn::Var param(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& b, const char* leaf) {
    const std::string full = b.name + "." + leaf;
    const auto idx = ps.find(full);
    if (!idx) throw_data("missing parameter " + full);
    return t.param(ps, *idx);
}

struct Qkv {
    nn::Var q, k, v;
};

Qkv project_qkv(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& b, nn::Var x) {
    const int c = b.channels;
    if (t.value(x).shape().c != c)
        throw_usage(b.name + ": expected " + std::to_string(c) + " channels, got " + t.value(x).shape().str());
    nn::Var h = nn::layer_norm(t, x, param(t, ps, b, "ln.gamma"), param(t, ps, b, "ln.beta"));
    h = nn::conv2d(t, h, param(t, ps, b, "qkv.weight"), std::nullopt, "qkv");
    h = nn::depthwise_conv2d(t, h, param(t, ps, b, "dw.weight"), "dw");
    return {nn::slice_channels(t, h, 0, c), nn::slice_channels(t, h, c, c), nn::slice_channels(t, h, 2 * c, c)};
}

}  // namespace

ScatBlock register_scat(nn::ParameterSet& ps, const std::string& name, int channels, int prior_channels,
                        std::mt19937_64& rng) {
    if (channels <= 0 || prior_channels < 0) throw_usage("register_scat: bad channel configuration");
    ScatBlock b{name, channels, prior_channels};
    const int c = channels;
    ps.fill(ps.add(name + ".ln.gamma", {1, c, 1, 1}), 1.0);
    ps.add(name + ".ln.beta", {1, c, 1, 1});
    ps.init_normal(ps.add(name + ".qkv.weight", {3 * c, c, 1, 1}), std::sqrt(1.0 / c), rng);
    ps.init_normal(ps.add(name + ".dw.weight", {3 * c, 1, 3, 3}), 1.0 / 3.0, rng);
    ps.add(name + ".log_alpha", {1, 1, 1, 1});
    ps.init_normal(ps.add(name + ".proj.weight", {c, c, 1, 1}), 0.5 * std::sqrt(1.0 / c), rng);
    if (prior_channels > 0) {
        ps.init_normal(ps.add(name + ".prior.weight", {c, prior_channels, 1, 1}), 0.1, rng);
        ps.fill(ps.add(name + ".prior.bias", {1, c, 1, 1}), 1.0);
    }
    return b;
}

nn::Var scat_prior(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var prior) {
    if (!block.has_prior()) throw_usage(block.name + ": block has no prior pathway");
    nn::Tape::Scope scope(t, block.name);
    const nn::Var p =
        nn::conv2d(t, prior, param(t, ps, block, "prior.weight"), param(t, ps, block, "prior.bias"), "prior");
    return nn::l2_normalize_spatial(t, p);
}

ScatOutput scat_core(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x, std::optional<nn::Var> p,
                     std::optional<nn::Var> log_alpha, nn::AttentionTrace* trace) {
    nn::Tape::Scope scope(t, block.name);
    const Qkv qkv = project_qkv(t, ps, block, x);
    // Masked pathway: an explicit all-ones map keeps the op sequence fixed.
    const nn::Var pm = p ? *p : t.input(nn::Tensor4(t.value(qkv.k).shape(), 1.0), "mask");
    const nn::Var pk = nn::mul(t, pm, qkv.k);
    const nn::Var pv = nn::mul(t, pm, qkv.v);
    const nn::Var la = log_alpha ? *log_alpha : param(t, ps, block, "log_alpha");
    const nn::Var att = nn::transposed_attention(t, pk, qkv.q, pv, la, trace);
    const nn::Var pre = nn::conv2d(t, att, param(t, ps, block, "proj.weight"), std::nullopt, "proj");
    return {nn::add(t, x, pre), pre};
}

nn::Var scat_forward(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x,
                     std::optional<nn::Var> prior, nn::AttentionTrace* trace) {
    std::optional<nn::Var> p;
    if (prior) p = scat_prior(t, ps, block, *prior);
    return scat_core(t, ps, block, x, p, std::nullopt, trace).out;
}

nn::Var mdta_forward(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x, nn::AttentionTrace* trace) {
    nn::Tape::Scope scope(t, block.name);
    const Qkv qkv = project_qkv(t, ps, block, x);
    const nn::Var att = nn::transposed_attention(t, qkv.k, qkv.q, qkv.v, param(t, ps, block, "log_alpha"), trace);
    const nn::Var pre = nn::conv2d(t, att, param(t, ps, block, "proj.weight"), std::nullopt, "proj");
    return nn::add(t, x, pre);
}

FeedForward register_ffn(nn::ParameterSet& ps, const std::string& name, int channels, int expansion,
                         std::mt19937_64& rng) {
    if (channels <= 0 || expansion <= 0) throw_usage("register_ffn: bad channel configuration");
    FeedForward f{name, channels, channels * expansion};
    const int c = channels, e = f.hidden;
    ps.fill(ps.add(name + ".ln.gamma", {1, c, 1, 1}), 1.0);
    ps.add(name + ".ln.beta", {1, c, 1, 1});
    ps.init_normal(ps.add(name + ".in.weight", {2 * e, c, 1, 1}), std::sqrt(1.0 / c), rng);
    ps.init_normal(ps.add(name + ".dw.weight", {2 * e, 1, 3, 3}), 1.0 / 3.0, rng);
    ps.init_normal(ps.add(name + ".out.weight", {c, e, 1, 1}), 0.5 * std::sqrt(1.0 / e), rng);
    return f;
}

nn::Var ffn_forward(nn::Tape& t, nn::ParameterSet& ps, const FeedForward& f, nn::Var x) {
    nn::Tape::Scope scope(t, f.name);
    const auto pp = [&](const char* leaf) {
        const std::string full = f.name + "." + leaf;
        const auto idx = ps.find(full);
        if (!idx) throw_data("missing parameter " + full);
        return t.param(ps, *idx);
    };
    nn::Var h = nn::layer_norm(t, x, pp("ln.gamma"), pp("ln.beta"));
    h = nn::conv2d(t, h, pp("in.weight"), std::nullopt, "in");
    h = nn::depthwise_conv2d(t, h, pp("dw.weight"), "dw");
    const nn::Var gated =
        nn::mul(t, nn::gelu(t, nn::slice_channels(t, h, 0, f.hidden)), nn::slice_channels(t, h, f.hidden, f.hidden));
    return nn::add(t, x, nn::conv2d(t, gated, pp("out.weight"), std::nullopt, "out"));
}

TransformerBlock register_block(nn::ParameterSet& ps, const std::string& name, int channels, int prior_channels,
                                int ffn_expansion, std::mt19937_64& rng) {
    TransformerBlock b;
    b.attn = register_scat(ps, name + ".scat", channels, prior_channels, rng);
    if (ffn_expansion > 0) b.ffn = register_ffn(ps, name + ".ffn", channels, ffn_expansion, rng);
    return b;
}

nn::Var block_forward(nn::Tape& t, nn::ParameterSet& ps, const TransformerBlock& block, nn::Var x,
                      std::optional<nn::Var> prior) {
    const nn::Var a = scat_forward(t, ps, block.attn, x, prior);
    return block.ffn.hidden > 0 ? ffn_forward(t, ps, block.ffn, a) : a;
}

}  // namespace ihdr::fusion
