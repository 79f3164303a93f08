#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ihdr/nn/tape.hpp"

namespace ihdr::nn {

// Spatial ops use zero "same" padding and stride 1.

/// w: Cout×Cin×k×k, optional bias: 1×Cout×1×1.
Var conv2d(Tape& t, Var x, Var w, std::optional<Var> bias, const std::string& name = "conv");

/// w: C×1×k×k, no bias.
Var depthwise_conv2d(Tape& t, Var x, Var w, const std::string& name = "dwconv");

/// Per-pixel normalisation across channels; gamma/beta: 1×C×1×1.
Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5, const std::string& name = "layer_norm");

Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);

Var concat_channels(Tape& t, const std::vector<Var>& parts);
Var slice_channels(Tape& t, Var x, int first, int count);

Var avg_pool2(Tape& t, Var x);
Var upsample_nearest2(Tape& t, Var x);

/// Each (n, c) plane divided by max(‖plane‖₂, eps).
Var l2_normalize_spatial(Tape& t, Var x, double eps = 1e-12);

/// Optional view of the attention matrix computed by transposed_attention.
struct AttentionTrace {
    Tensor4 logits;     // 1×1×C×C, before softmax (already divided by α)
    Tensor4 attention;  // 1×1×C×C, row-softmaxed
};

/// Channel-wise (transposed) attention:
///   M = keysᵀ·queries / α   (C×C, contraction over the H·W positions)
///   A = softmax over each row of M
///   out = values · A        (H·W×C)
/// `keys` and `values` arrive already modulated by the prior (P⊙K, P⊙V).
/// α = exp(log_alpha); log_alpha is a 1×1×1×1 tensor.
Var transposed_attention(Tape& t, Var keys, Var queries, Var values, Var log_alpha,
                         AttentionTrace* trace = nullptr, const std::string& name = "attention");

Var tanh_act(Tape& t, Var x);

/// x·Φ(x) with the exact normal CDF.
Var gelu(Tape& t, Var x);

/// log(1 + exp(βx)) / β; smooth and strictly positive.
Var softplus(Tape& t, Var x, double beta);
double softplus(double x, double beta);

/// C¹ rectifier: 0 below -delta, identity above delta, quadratic blend in
/// between. Non-negative everywhere.
Var smooth_relu(Tape& t, Var x, double delta);
double smooth_relu(double x, double delta);

/// clamp(x, 0, 1); zero gradient outside the open interval.
Var clamp_unit(Tape& t, Var x);

/// log(1 + μx) / log(1 + μ).
Var mu_law(Tape& t, Var x, double mu);

/// clamp((c·x)^(1/γ), 0, 1) for x ≥ 0.
Var power_tonemap(Tape& t, Var x, double c, double gamma);

/// Mean absolute difference, as a 1×1×1×1 scalar.
Var l1_mean(Tape& t, Var a, Var b);

/// wa·a + wb·b for same-shape inputs.
Var weighted_sum(Tape& t, Var a, double wa, Var b, double wb);

}  // namespace ihdr::nn
