#include "ihdr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ihdr/error.hpp"
#include "ihdr/io.hpp"

namespace ihdr {

int select_reference(const Bracket& bracket) {
    const int k = static_cast<int>(bracket.size());
    if (k < 2) throw_usage("select_reference: bracket requires K >= 2");
    if (const auto r = bracket.reference_index()) return *r;

    std::vector<double> sharp(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) sharp[i] = sharpness(bracket[i]);
    std::vector<double> sorted = sharp;
    std::sort(sorted.begin(), sorted.end());
    const double median =
        k % 2 == 1 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);

    int best = -1;
    double best_dist = 0.0;
    for (int i = 0; i < k; ++i) {
        if (sharp[i] < median) continue;
        const double d = std::abs(mean_luminance(bracket[i]) - 0.5);
        if (best < 0 || d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

FusionPlan plan(const Bracket& bracket, FuserBackend fuser, ToneBackend mapper) {
    FusionPlan p;
    p.reference_index = select_reference(bracket);
    p.fuser = fuser;
    p.mapper = mapper;
    const double ref_luma = mean_luminance(bracket[static_cast<std::size_t>(p.reference_index)]);
    std::vector<std::pair<double, int>> keyed;
    for (int i = 0; i < static_cast<int>(bracket.size()); ++i)
        if (i != p.reference_index) keyed.emplace_back(std::abs(mean_luminance(bracket[i]) - ref_luma), i);
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [d, i] : keyed) p.nonref_order.push_back(i);
    return p;
}

namespace {

void check_plan(const Bracket& bracket, const FusionPlan& plan) {
    const int k = static_cast<int>(bracket.size());
    if (plan.nonref_order.empty()) throw_usage("iterative_fuse: empty plan");
    if (plan.reference_index < 0 || plan.reference_index >= k)
        throw_usage("iterative_fuse: reference index out of range");
    std::vector<int> seen(static_cast<std::size_t>(k), 0);
    seen[plan.reference_index] = 1;
    for (int i : plan.nonref_order) {
        if (i < 0 || i >= k || seen[i]) throw_usage("iterative_fuse: plan order is not a permutation of the non-references");
        seen[i] = 1;
    }
    if (static_cast<int>(plan.nonref_order.size()) != k - 1)
        throw_usage("iterative_fuse: plan does not cover every frame");
}

HdrImage scaled(const HdrImage& h, double s) {
    RgbBuffer px = h.pixels();
    for (double& v : px.data()) v *= s;
    return HdrImage(std::move(px));
}

}  // namespace

IterationResult iterative_fuse(const Bracket& bracket, const FusionPlan& plan, Fuser& fuser, Mapper& mapper,
                               const IterationOptions& opts) {
    check_plan(bracket, plan);
    const double c = opts.params.c;
    const LdrImage& ref0 = bracket[static_cast<std::size_t>(plan.reference_index)];
    const double factor = c / ref0.exposure_time();
    const auto rescale = [&](const LdrImage& f) { return f.with_exposure(f.exposure_time() * factor, f.ev()); };

    SideInfoOptions side = opts.side;
    side.gamma = opts.params.gamma;
    if (opts.dump_dir) std::filesystem::create_directories(*opts.dump_dir);

    LdrImage ref = rescale(ref0);
    IterationResult result{HdrImage(RgbBuffer(ref.width(), ref.height())), 0, 0};
    for (std::size_t step = 0; step < plan.nonref_order.size(); ++step) {
        const LdrImage nonref = rescale(bracket[static_cast<std::size_t>(plan.nonref_order[step])]);
        const SideInfoBundle bundle = make_side_info(ref, nonref, side);
        result.hdr = fuser.fuse(bundle);
        ++result.fusions;
        const std::string tag = "step_" + std::to_string(step);
        if (opts.dump_dir) {
            write_pfm(scaled(result.hdr, factor), *opts.dump_dir / (tag + "_fused.pfm"));
            write_mask_png(bundle.diff.mask, *opts.dump_dir / (tag + "_diff.png"));
        }
        if (step + 1 < plan.nonref_order.size()) {
            ref = mapper.map(result.hdr).with_exposure(c, 0.0);
            ++result.mappings;
            if (opts.dump_dir) write_png16(ref, *opts.dump_dir / (tag + "_mapped.png"));
        }
    }
    // Internal units put the reference at exposure c; undo that.
    result.hdr = scaled(result.hdr, factor);
    return result;
}

}  // namespace ihdr
