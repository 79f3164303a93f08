#pragma once

#include <optional>
#include <random>
#include <string>

#include "ihdr/nn/ops.hpp"

namespace ihdr::fusion {

/// Parameter handles of one semi-cross attention block of width C.
///
/// Parameters (prefix = name): ln.gamma, ln.beta (1×C×1×1), qkv.weight
/// (3C×C×1×1), dw.weight (3C×1×3×3), log_alpha (1), proj.weight (C×C×1×1),
/// and when prior_channels > 0: prior.weight (C×Cp×1×1), prior.bias.
struct ScatBlock {
    std::string name;
    int channels = 0;
    int prior_channels = 0;  // 0: block has no prior pathway

    bool has_prior() const { return prior_channels > 0; }
};

ScatBlock register_scat(nn::ParameterSet& ps, const std::string& name, int channels, int prior_channels,
                        std::mt19937_64& rng);

struct ScatOutput {
    nn::Var out;           // x + pre_residual
    nn::Var pre_residual;  // proj((P⊙V)·A)
};

/// Block body with an explicit modulation map P (1×C×H×W, used as given) or
/// the masked pathway (P ≡ 1) when P is empty. `log_alpha` overrides the
/// block's learned temperature when supplied.
ScatOutput scat_core(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x, std::optional<nn::Var> p,
                     std::optional<nn::Var> log_alpha = std::nullopt, nn::AttentionTrace* trace = nullptr);

/// P = L2-normalised (per channel, over space) 1×1 projection of the prior.
nn::Var scat_prior(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var prior);

/// Full block: projects `prior` when given, otherwise masks the pathway.
nn::Var scat_forward(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x,
                     std::optional<nn::Var> prior, nn::AttentionTrace* trace = nullptr);

/// Prior-free transposed attention block sharing the SCAT parameter layout.
nn::Var mdta_forward(nn::Tape& t, nn::ParameterSet& ps, const ScatBlock& block, nn::Var x,
                     nn::AttentionTrace* trace = nullptr);

/// Gated feed-forward sub-layer: x + W_out(GELU(a) ⊙ b) where [a, b] =
/// dw3×3(W_in(LN(x))). Parameters: ln.gamma, ln.beta, in.weight (2E×C×1×1),
/// dw.weight (2E×1×3×3), out.weight (C×E×1×1), E = expansion·C.
struct FeedForward {
    std::string name;
    int channels = 0;
    int hidden = 0;
};

FeedForward register_ffn(nn::ParameterSet& ps, const std::string& name, int channels, int expansion,
                         std::mt19937_64& rng);

nn::Var ffn_forward(nn::Tape& t, nn::ParameterSet& ps, const FeedForward& ffn, nn::Var x);

/// Attention followed by the feed-forward sub-layer.
struct TransformerBlock {
    ScatBlock attn;
    FeedForward ffn;  // hidden == 0: absent
};

TransformerBlock register_block(nn::ParameterSet& ps, const std::string& name, int channels, int prior_channels,
                                int ffn_expansion, std::mt19937_64& rng);

nn::Var block_forward(nn::Tape& t, nn::ParameterSet& ps, const TransformerBlock& block, nn::Var x,
                      std::optional<nn::Var> prior);

}  // namespace ihdr::fusion
