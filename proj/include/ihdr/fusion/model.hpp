#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ihdr/fusion/scat.hpp"
#include "ihdr/side_info.hpp"

namespace ihdr::fusion {

struct FusionConfig {
    std::vector<int> channels{8, 16, 32};  // one entry per level
    double output_beta = 100.0;            // sharpness of the softplus output
    int ffn_expansion = 2;                 // 0 drops the feed-forward sub-layers

    int levels() const { return static_cast<int>(channels.size()); }
    /// Spatial dimensions must be multiples of this.
    int divisor() const { return 1 << (levels() - 1); }
    void validate() const;
    bool operator==(const FusionConfig&) const = default;
};

/// Two-branch encoder (reference / non-reference), per-level merge, U-shaped
/// decoder guided by the structure-tensor pyramid, one prior-free refinement
/// block and a 1×1 head over [features, H_r, H_nr] followed by softplus.
/// Each block is SCAT attention plus a gated feed-forward sub-layer.
struct FusionModel {
    FusionConfig config;
    nn::ParameterSet params;
    std::vector<TransformerBlock> enc_ref;
    std::vector<TransformerBlock> enc_nonref;
    std::vector<TransformerBlock> dec;
    TransformerBlock refine;

    static FusionModel create(const FusionConfig& config, std::uint64_t seed);
};

/// Tensors a forward pass consumes, built once per bundle.
struct FusionInputs {
    nn::Tensor4 ref;        // 1×6×H×W: [L_r, H_r]
    nn::Tensor4 nonref;     // 1×6×H×W: [L_nr, H_nr]
    nn::Tensor4 ref_hdr;    // 1×3×H×W
    nn::Tensor4 nonref_hdr;
    std::vector<nn::Tensor4> st_pyramid;    // 1×1 per level
    std::vector<nn::Tensor4> diff_pyramid;  // 1×1 per level

    int width() const { return ref.shape().w; }
    int height() const { return ref.shape().h; }
};

FusionInputs make_fusion_inputs(const SideInfoBundle& bundle, int levels);

/// Records the network on a tape and returns the 1×3×H×W output (> 0).
nn::Var dihdr_forward(nn::Tape& t, FusionModel& model, const FusionInputs& in);

HdrImage dihdr_forward(const SideInfoBundle& bundle, FusionModel& model);

// ---- MAC accounting ---------------------------------------------------------

enum class LayerKind { Conv, Depthwise, Attention };

struct LayerSpec {
    std::string name;
    LayerKind kind;
    int height;
    int width;
    int kernel;  // spatial kernel side (conv/depthwise)
    int in_channels;
    int out_channels;
};

std::uint64_t layer_macs(const LayerSpec& layer);

/// Every MAC-bearing layer of a forward pass at h×w, in execution order;
/// names match the labels a recorded tape reports.
std::vector<LayerSpec> architecture_layers(const FusionConfig& config, int height, int width);

struct MacTable {
    std::vector<std::pair<std::string, std::uint64_t>> layers;
    std::uint64_t total = 0;
};

MacTable count_macs(const FusionConfig& config, int height, int width);

// ---- weight-free fuser --------------------------------------------------------

struct BaselineOptions {
    double sigma = 0.2;               // well-exposedness spread around mid-gray
    double saturation_level = 0.999;  // a frame's weight is zero at or above this
    bool exposure_weighting = true;   // scale each weight by the frame's exposure time
};

/// Well-exposedness blend of the two pseudo-HDRs; pixels flagged by the
/// difference mask keep the reference.
HdrImage baseline_fuse(const SideInfoBundle& bundle, const BaselineOptions& opts = {});

}  // namespace ihdr::fusion
