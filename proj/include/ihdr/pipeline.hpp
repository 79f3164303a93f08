#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ihdr/fusion/model.hpp"
#include "ihdr/side_info.hpp"
#include "ihdr/tonemap.hpp"

namespace ihdr {

enum class FuserBackend { Network, Baseline };

struct FusionPlan {
    int reference_index = 0;
    std::vector<int> nonref_order;  // ascending luminance distance to the reference
    FuserBackend fuser = FuserBackend::Baseline;
    ToneBackend mapper = ToneBackend::Analytic;
};

/// Manifest override first; otherwise, among frames at least as sharp as the
/// median, the one whose mean luma is closest to 0.5 (lowest index on ties).
int select_reference(const Bracket& bracket);

FusionPlan plan(const Bracket& bracket, FuserBackend fuser = FuserBackend::Baseline,
                ToneBackend mapper = ToneBackend::Analytic);

class Fuser {
public:
    virtual ~Fuser() = default;
    virtual HdrImage fuse(const SideInfoBundle& bundle) = 0;
};

class Mapper {
public:
    virtual ~Mapper() = default;
    virtual LdrImage map(const HdrImage& hdr) = 0;
};

class BaselineFuser : public Fuser {
public:
    HdrImage fuse(const SideInfoBundle& bundle) override { return fusion::baseline_fuse(bundle); }
};

class NetworkFuser : public Fuser {
public:
    explicit NetworkFuser(fusion::FusionModel& model) : model_(model) {}
    HdrImage fuse(const SideInfoBundle& bundle) override { return fusion::dihdr_forward(bundle, model_); }

private:
    fusion::FusionModel& model_;
};

class ToneNetMapper : public Mapper {
public:
    explicit ToneNetMapper(const ToneNetModel& model) : model_(model) {}
    LdrImage map(const HdrImage& hdr) override { return tonenet_apply(hdr, model_); }

private:
    const ToneNetModel& model_;
};

struct IterationOptions {
    SensorParams params;  // c and γ of the iteration domain
    SideInfoOptions side;
    std::optional<std::filesystem::path> dump_dir;  // per-step fused/mapped/mask files
};

struct IterationResult {
    HdrImage hdr;  // in the bracket's own exposure units
    int fusions = 0;
    int mappings = 0;
};

/// Fuse the reference with each non-reference frame in plan order, mapping
/// every intermediate result back to the LDR domain (exposure c) to act as
/// the next reference. Frames are rescaled internally so the reference
/// exposure equals c; the result is converted back.
IterationResult iterative_fuse(const Bracket& bracket, const FusionPlan& plan, Fuser& fuser, Mapper& mapper,
                               const IterationOptions& opts = {});

}  // namespace ihdr
