// ihdr: command-line front end for bracket simulation, side information,
// iterative fusion, tonemapping, training, evaluation and MAC counting.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ihdr/error.hpp"
#include "ihdr/fusion/checkpoint.hpp"
#include "ihdr/fusion/train.hpp"
#include "ihdr/io.hpp"
#include "ihdr/metrics.hpp"
#include "ihdr/parallel.hpp"
#include "ihdr/pipeline.hpp"
#include "ihdr/sensor.hpp"
#include "ihdr/side_info.hpp"
#include "ihdr/tonemap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ihdr;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Globals {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool verbose = false;
};

void print_config(const std::string& command, json cfg, const Globals& g) {
    cfg["command"] = command;
    cfg["seed"] = g.seed;
    cfg["threads"] = thread_count();
    std::cerr << "config: " << cfg.dump() << "\n";
}

void log(const Globals& g, const std::string& msg) {
    if (g.verbose) std::cerr << msg << "\n";
}

/// JSON cannot carry infinities; identical-image PSNR is reported as "inf".
json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::vector<double> parse_evs(const std::string& text) {
    std::vector<double> evs;
    const auto range = text.find("..");
    try {
        if (range != std::string::npos) {
            const int lo = std::stoi(text.substr(0, range));
            const int hi = std::stoi(text.substr(range + 2));
            if (lo > hi) throw_usage("--evs range must be ascending: " + text);
            for (int v = lo; v <= hi; ++v) evs.push_back(v);
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) evs.push_back(std::stod(item));
        }
    } catch (const std::invalid_argument&) {
        throw_usage("cannot parse --evs '" + text + "'");
    } catch (const std::out_of_range&) {
        throw_usage("cannot parse --evs '" + text + "'");
    }
    if (evs.empty()) throw_usage("--evs is empty");
    return evs;
}

std::pair<int, int> parse_size(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument("no x");
        const int w = std::stoi(text.substr(0, x));
        const int h = std::stoi(text.substr(x + 1));
        if (w <= 0 || h <= 0) throw std::invalid_argument("non-positive");
        return {w, h};
    } catch (const std::exception&) {
        throw_usage("size must be WIDTHxHEIGHT, got '" + text + "'");
    }
}

ToneBackend parse_backend(const std::string& s) { return s == "learned" ? ToneBackend::Learned : ToneBackend::Analytic; }

json sensor_json(const SensorParams& p) {
    return {{"c", p.c}, {"gamma", p.gamma}, {"adc_bits", p.adc_bits}, {"full_well", p.full_well},
            {"read_noise", p.read_noise}, {"dark_current", p.dark_current},
            {"quantum_efficiency", p.quantum_efficiency}, {"conversion_gain", p.conversion_gain}};
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string hdr;
    std::string synthetic = "256x256";
    std::string evs = "-2..2";
    std::string noise = "on";
    std::string model = "full";
    int motion_dx = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& a, const Globals& g) {
    SensorParams params;
    const std::vector<double> evs = parse_evs(a.evs);
    BracketOptions opts;
    opts.model = a.model == "simplified" ? SimulationModel::Simplified : SimulationModel::Full;
    opts.noise = a.noise == "on" ? NoiseMode::Stochastic : NoiseMode::Deterministic;
    opts.quantize = opts.model == SimulationModel::Simplified && a.noise == "on";
    std::optional<HdrImage> scene;
    if (!a.hdr.empty()) {
        if (!fs::exists(a.hdr)) throw_data("HDR input not found: " + a.hdr);
        scene = read_pfm(a.hdr);
    } else {
        const auto [w, h] = parse_size(a.synthetic);
        scene = synthetic_scene(w, h, g.seed);
    }
    if (a.motion_dx != 0) {
        MotionSpec m;
        m.width = m.height = std::max(4, scene->width() / 8);
        m.x = scene->width() / 3;
        m.y = scene->height() / 3;
        m.dx = a.motion_dx;
        opts.motion = m;
    }
    print_config("simulate",
                 {{"hdr", a.hdr.empty() ? "synthetic:" + a.synthetic : a.hdr}, {"evs", evs}, {"noise", a.noise},
                  {"model", a.model}, {"motion_dx", a.motion_dx}, {"out", a.out}, {"sensor", sensor_json(params)}},
                 g);
    if (evs.size() < 2) throw_usage("simulate: a bracket needs at least two EVs");
    const Bracket bracket = make_bracket(*scene, evs, params, g.seed, opts);
    fs::create_directories(a.out);
    const HdrImage gt = opts.motion ? scene_at(*scene, *opts.motion, 0) : *scene;
    write_pfm(gt, fs::path(a.out) / "ground_truth.pfm");
    const fs::path manifest = save_bracket(bracket, a.out, std::string("ground_truth.pfm"));
    std::cout << "wrote " << bracket.size() << " frames and " << manifest.string() << "\n";
}

// ---- sideinfo ---------------------------------------------------------------

struct SideInfoArgs {
    std::string manifest;
    int ref = -1;
    int nonref = -1;
    std::string out;
    double threshold = 0.2;
    double tau = 1e-3;
};

void run_sideinfo(const SideInfoArgs& a, const Globals& g) {
    print_config("sideinfo",
                 {{"manifest", a.manifest}, {"ref", a.ref}, {"nonref", a.nonref}, {"out", a.out},
                  {"threshold", a.threshold}, {"tau", a.tau}},
                 g);
    const Bracket bracket = load_bracket(a.manifest);
    const int ref = a.ref >= 0 ? a.ref : select_reference(bracket);
    int nonref = a.nonref;
    if (nonref < 0) nonref = plan(bracket).nonref_order.front();
    const int k = static_cast<int>(bracket.size());
    if (ref >= k || nonref >= k || ref == nonref) throw_usage("sideinfo: --ref/--nonref must be distinct frame indices");
    SideInfoOptions opts;
    opts.diff_threshold = a.threshold;
    opts.st.tau = a.tau;
    const SideInfoBundle b = make_side_info(bracket[ref], bracket[nonref], opts);
    const fs::path out(a.out);
    fs::create_directories(out);
    write_mask_png(b.st.reversed_flat, out / "reversed_flat.png");
    write_mask_png(b.st.edge_map, out / "edge_map.png");
    write_mask_png(b.st.corner_map, out / "corner_map.png");
    write_mask_png(b.diff.mask, out / "difference_mask.png");
    write_pfm(b.ref_pseudo_hdr, out / "ref_pseudo_hdr.pfm");
    write_pfm(b.nonref_pseudo_hdr, out / "nonref_pseudo_hdr.pfm");
    const auto mean = [](const Plane& p) {
        double s = 0.0;
        for (double v : p.data()) s += v;
        return s / static_cast<double>(p.size());
    };
    const json report = {{"reference_index", ref},
                         {"nonref_index", nonref},
                         {"reversed_flat_fraction", mean(b.st.reversed_flat)},
                         {"edge_fraction", mean(b.st.edge_map)},
                         {"corner_fraction", mean(b.st.corner_map)},
                         {"difference_fraction", mean(b.diff.mask)}};
    write_file_atomic(out / "sideinfo.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
}

// ---- fuse -------------------------------------------------------------------

struct FuseArgs {
    std::string manifest;
    std::string fuser = "baseline";
    std::string model;
    std::string mapper = "analytic";
    std::string out;
    std::string dump;
};

void run_fuse(const FuseArgs& a, const Globals& g) {
    print_config("fuse",
                 {{"manifest", a.manifest}, {"fuser", a.fuser}, {"model", a.model}, {"mapper", a.mapper},
                  {"out", a.out}, {"dump_intermediates", a.dump}},
                 g);
    if (!fs::exists(a.manifest)) throw_data("manifest not found: " + a.manifest);
    const bool network = a.fuser == "network";
    const bool learned = a.mapper == "learned";
    if ((network || learned) && a.model.empty()) throw_usage("--model is required for the network fuser or learned mapper");
    const Bracket bracket = load_bracket(a.manifest);

    std::optional<fusion::Checkpoint> ck;
    if (!a.model.empty()) ck = fusion::load_checkpoint(a.model);
    if (learned && ck->tonenet.backend != ToneBackend::Learned)
        throw_data("checkpoint " + a.model + " carries no learned ToneNet");

    const FusionPlan p = plan(bracket, network ? FuserBackend::Network : FuserBackend::Baseline, parse_backend(a.mapper));
    ToneNetModel analytic = ToneNetModel::analytic(ck ? ck->tonenet.anchor : SensorParams{});
    ToneNetMapper mapper(learned ? ck->tonenet : analytic);
    BaselineFuser baseline;
    std::optional<NetworkFuser> net;
    if (network) net.emplace(ck->model);
    Fuser& fuser = network ? static_cast<Fuser&>(*net) : static_cast<Fuser&>(baseline);

    IterationOptions opts;
    opts.params = (learned ? ck->tonenet : analytic).anchor;
    if (!a.dump.empty()) opts.dump_dir = fs::path(a.dump);
    std::ostringstream order;
    for (int i : p.nonref_order) order << i << ' ';
    log(g, "reference " + std::to_string(p.reference_index) + ", order " + order.str());
    const IterationResult r = iterative_fuse(bracket, p, fuser, mapper, opts);
    write_pfm(r.hdr, a.out);
    std::cout << "fused " << bracket.size() << " frames (" << r.fusions << " fusions, " << r.mappings
              << " mappings) into " << a.out << "\n";
}

// ---- tonemap ----------------------------------------------------------------

struct TonemapArgs {
    std::string in;
    std::string backend = "analytic";
    std::string model;
    double mu = kDefaultMu;
    std::string out;
};

void run_tonemap(const TonemapArgs& a, const Globals& g) {
    print_config("tonemap", {{"in", a.in}, {"backend", a.backend}, {"model", a.model}, {"mu", a.mu}, {"out", a.out}}, g);
    if (!fs::exists(a.in)) throw_data("HDR input not found: " + a.in);
    const HdrImage h = read_pfm(a.in);
    if (a.backend == "mulaw") {
        const double m = h.max_value();
        RgbBuffer px = h.pixels();
        if (m > 0.0)
            for (double& v : px.data()) v /= m;
        write_png16(mu_law(px, a.mu), a.out);
    } else if (a.backend == "learned") {
        if (a.model.empty()) throw_usage("--model is required for the learned backend");
        const fusion::Checkpoint ck = fusion::load_checkpoint(a.model);
        if (ck.tonenet.backend != ToneBackend::Learned) throw_data("checkpoint " + a.model + " carries no learned ToneNet");
        write_png16(tonenet_apply(h, ck.tonenet), a.out);
    } else {
        write_png16(tonenet_apply(h, ToneNetModel::analytic()), a.out);
    }
    std::cout << "wrote " << a.out << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data = "synthetic";
    int samples = 8;
    int steps = 500;
    int patch = 32;
    int batch = 1;
    double lr_init = 2e-4;
    double lr_final = 1e-6;
    double lambda = 0.1;
    double weight_decay = 1e-4;
    double grad_clip = 0.0;
    std::string channels = "8,16,32";
    std::string tonenet = "analytic";
    std::string out;
    std::string history;
};

/// Every manifest under `dir` (itself or one level down) with a ground truth
/// becomes one pair per non-reference frame, in reference-exposure-c units.
std::vector<fusion::TrainSample> load_training_dir(const fs::path& dir, const SensorParams& params) {
    std::vector<fs::path> manifests;
    if (fs::exists(dir / "manifest.json")) manifests.push_back(dir / "manifest.json");
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) manifests.push_back(e.path() / "manifest.json");
    std::sort(manifests.begin(), manifests.end());
    if (manifests.empty()) throw_data("no manifest.json found under " + dir.string());

    std::vector<fusion::TrainSample> out;
    for (const fs::path& mpath : manifests) {
        const BracketManifest m = parse_manifest(read_file(mpath));
        if (!m.ground_truth) throw_data(mpath.string() + " has no ground_truth entry");
        const fs::path gt_path = mpath.parent_path() / *m.ground_truth;
        if (!fs::exists(gt_path)) throw_data("ground truth not found: " + gt_path.string());
        const Bracket b = load_bracket(mpath);
        const HdrImage gt = read_pfm(gt_path);
        if (gt.width() != b.width() || gt.height() != b.height()) throw_data("ground truth size mismatch in " + mpath.string());
        const FusionPlan p = plan(b);
        const LdrImage& ref = b[p.reference_index];
        const double factor = params.c / ref.exposure_time();
        RgbBuffer g = gt.pixels();
        for (double& v : g.data()) v /= factor;
        const auto rescale = [&](const LdrImage& f) { return f.with_exposure(f.exposure_time() * factor, f.ev()); };
        for (int j : p.nonref_order) out.push_back({rescale(ref), rescale(b[j]), HdrImage(g)});
    }
    return out;
}

std::vector<int> parse_channels(const std::string& text) {
    std::vector<int> ch;
    std::stringstream ss(text);
    std::string item;
    try {
        while (std::getline(ss, item, ',')) ch.push_back(std::stoi(item));
    } catch (const std::exception&) {
        throw_usage("cannot parse --channels '" + text + "'");
    }
    return ch;
}

void run_train(const TrainArgs& a, const Globals& g) {
    fusion::TrainConfig cfg;
    cfg.steps = a.steps;
    cfg.patch = a.patch;
    cfg.batch = a.batch;
    cfg.lr_init = a.lr_init;
    cfg.lr_final = a.lr_final;
    cfg.lambda = a.lambda;
    cfg.weight_decay = a.weight_decay;
    cfg.grad_clip = a.grad_clip;
    cfg.seed = g.seed;
    fusion::FusionConfig fc;
    fc.channels = parse_channels(a.channels);
    print_config("train",
                 {{"data", a.data}, {"samples", a.samples}, {"steps", a.steps}, {"patch", a.patch}, {"batch", a.batch},
                  {"lr_init", a.lr_init}, {"lr_final", a.lr_final}, {"lambda", a.lambda},
                  {"weight_decay", a.weight_decay}, {"grad_clip", a.grad_clip}, {"channels", fc.channels},
                  {"tonenet", a.tonenet}, {"out", a.out}},
                 g);
    cfg.validate();
    fc.validate();
    const SensorParams params;
    std::vector<fusion::TrainSample> samples;
    if (a.data == "synthetic") {
        samples = fusion::synthetic_samples(a.samples, a.patch, g.seed, params);
    } else {
        if (!fs::is_directory(a.data)) throw_data("training data directory not found: " + a.data);
        samples = load_training_dir(a.data, params);
    }
    fusion::FusionModel model = fusion::FusionModel::create(fc, g.seed);
    ToneNetModel tonenet =
        a.tonenet == "learned" ? ToneNetModel::learned(params, g.seed) : ToneNetModel::analytic(params);
    log(g, "training on " + std::to_string(samples.size()) + " pairs, " + std::to_string(model.params.size()) +
               " parameters");
    const fusion::TrainResult r = fusion::train(model, samples, cfg, tonenet);
    fusion::save_checkpoint(a.out, model, tonenet);
    if (!a.history.empty())
        write_file_atomic(a.history, json{{"loss", r.loss_history}, {"lr", r.lr_history}}.dump() + "\n");
    std::cout << "loss " << r.loss_history.front() << " -> " << r.loss_history.back() << " after "
              << r.loss_history.size() << " steps; wrote " << a.out << "\n";
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string gt;
    double mu = kDefaultMu;
    std::string json_out;
};

void run_eval(const EvalArgs& a, const Globals& g) {
    print_config("eval", {{"pred", a.pred}, {"gt", a.gt}, {"mu", a.mu}, {"json", a.json_out}}, g);
    for (const std::string& p : {a.pred, a.gt})
        if (!fs::exists(p)) throw_data("image not found: " + p);
    const MetricsReport r = evaluate(read_pfm(a.pred), read_pfm(a.gt), a.mu);
    const json report = {{"psnr_l", number_or_inf(r.psnr_l)},
                         {"psnr_mu", number_or_inf(r.psnr_mu)},
                         {"ssim_l", r.ssim_l},
                         {"ssim_mu", r.ssim_mu}};
    if (!a.json_out.empty()) write_file_atomic(a.json_out, report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
}

// ---- macs -------------------------------------------------------------------

struct MacsArgs {
    std::string model;
    std::string size = "1500x1000";
    std::string json_out;
};

void run_macs(const MacsArgs& a, const Globals& g) {
    print_config("macs", {{"model", a.model}, {"size", a.size}, {"json", a.json_out}}, g);
    const auto [w, h] = parse_size(a.size);
    fusion::FusionConfig fc;
    if (!a.model.empty()) fc = fusion::load_checkpoint(a.model).model.config;
    const fusion::MacTable t = fusion::count_macs(fc, h, w);
    json layers = json::array();
    for (const auto& [name, macs] : t.layers) {
        layers.push_back({{"layer", name}, {"macs", macs}});
        std::printf("%-28s %16llu\n", name.c_str(), static_cast<unsigned long long>(macs));
    }
    std::printf("%-28s %16llu  (%.3f GMACs)\n", "total", static_cast<unsigned long long>(t.total), t.total * 1e-9);
    if (!a.json_out.empty())
        write_file_atomic(a.json_out, json{{"width", w}, {"height", h}, {"layers", layers}, {"total", t.total}}.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ihdr: iterative multi-exposure HDR fusion"};
    app.require_subcommand(1);
    app.allow_extras(false);
    app.fallthrough();  // global flags may follow the subcommand
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed for simulation, initialisation and cropping");
    app.add_option("--threads", g.threads, "worker threads for image kernels (0 = all cores)");
    app.add_flag("--verbose", g.verbose, "progress messages on stderr");
    app.set_version_flag("--version", std::string("ihdr ") + kVersion + " (checkpoint format " +
                                          std::to_string(fusion::kCheckpointVersion) + ")");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "simulate an exposure bracket from an HDR scene");
    c_sim->add_option("--hdr", sim.hdr, "input scene (PFM); omit for a procedural scene");
    c_sim->add_option("--synthetic", sim.synthetic, "procedural scene size WIDTHxHEIGHT");
    c_sim->add_option("--evs", sim.evs, "EV list: 'a..b' or comma-separated");
    c_sim->add_option("--noise", sim.noise, "on|off")->check(CLI::IsMember({"on", "off"}));
    c_sim->add_option("--model", sim.model, "full|simplified")->check(CLI::IsMember({"full", "simplified"}));
    c_sim->add_option("--motion", sim.motion_dx, "horizontal displacement per EV step of a moving square");
    c_sim->add_option("--out", sim.out, "output directory")->required();

    SideInfoArgs si;
    auto* c_si = app.add_subcommand("sideinfo", "compute structure-tensor and difference-mask side information");
    c_si->add_option("--manifest", si.manifest, "bracket manifest")->required();
    c_si->add_option("--ref", si.ref, "reference index (default: selected)");
    c_si->add_option("--nonref", si.nonref, "non-reference index (default: nearest in luminance)");
    c_si->add_option("--threshold", si.threshold, "difference-mask threshold");
    c_si->add_option("--tau", si.tau, "structure-tensor eigenvalue threshold");
    c_si->add_option("--out", si.out, "output directory")->required();

    FuseArgs fu;
    auto* c_fu = app.add_subcommand("fuse", "iteratively fuse a bracket into a linear HDR image");
    c_fu->add_option("--manifest", fu.manifest, "bracket manifest")->required();
    c_fu->add_option("--fuser", fu.fuser, "baseline|network")->check(CLI::IsMember({"baseline", "network"}));
    c_fu->add_option("--model", fu.model, "checkpoint for the network fuser / learned mapper");
    c_fu->add_option("--mapper", fu.mapper, "analytic|learned")->check(CLI::IsMember({"analytic", "learned"}));
    c_fu->add_option("--out", fu.out, "output PFM")->required();
    c_fu->add_option("--dump-intermediates", fu.dump, "directory for per-step images");

    TonemapArgs tm;
    auto* c_tm = app.add_subcommand("tonemap", "map a linear HDR image to the LDR domain");
    c_tm->add_option("--in", tm.in, "input PFM")->required();
    c_tm->add_option("--backend", tm.backend, "analytic|learned|mulaw")
        ->check(CLI::IsMember({"analytic", "learned", "mulaw"}));
    c_tm->add_option("--model", tm.model, "checkpoint with a learned ToneNet");
    c_tm->add_option("--mu", tm.mu, "mu-law compression constant");
    c_tm->add_option("--out", tm.out, "output 16-bit PNG")->required();

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "train the fusion network");
    c_tr->add_option("--data", tr.data, "'synthetic' or a directory of manifests with ground truth");
    c_tr->add_option("--samples", tr.samples, "number of synthetic pairs");
    c_tr->add_option("--steps", tr.steps, "optimiser steps");
    c_tr->add_option("--patch", tr.patch, "training patch side");
    c_tr->add_option("--batch", tr.batch, "pairs per step");
    c_tr->add_option("--lr-init", tr.lr_init, "initial learning rate");
    c_tr->add_option("--lr-final", tr.lr_final, "final learning rate");
    c_tr->add_option("--lambda", tr.lambda, "weight of the mapping loss");
    c_tr->add_option("--weight-decay", tr.weight_decay, "decoupled weight decay");
    c_tr->add_option("--grad-clip", tr.grad_clip, "gradient L2-norm cap (0 = off)");
    c_tr->add_option("--channels", tr.channels, "channel width per level, comma-separated");
    c_tr->add_option("--tonenet", tr.tonenet, "analytic|learned")->check(CLI::IsMember({"analytic", "learned"}));
    c_tr->add_option("--out", tr.out, "output checkpoint")->required();
    c_tr->add_option("--history", tr.history, "write the loss history as JSON");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "PSNR/SSIM in linear and mu-law domains");
    c_ev->add_option("--pred", ev.pred, "predicted PFM")->required();
    c_ev->add_option("--gt", ev.gt, "ground-truth PFM")->required();
    c_ev->add_option("--mu", ev.mu, "mu-law compression constant");
    c_ev->add_option("--json", ev.json_out, "write the report as JSON");

    MacsArgs mc;
    auto* c_mc = app.add_subcommand("macs", "count multiply-accumulates of the fusion network");
    c_mc->add_option("--model", mc.model, "checkpoint (default: built-in configuration)");
    c_mc->add_option("--size", mc.size, "input WIDTHxHEIGHT");
    c_mc->add_option("--json", mc.json_out, "write the table as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        set_thread_count(g.threads);
        if (c_sim->parsed()) run_simulate(sim, g);
        if (c_si->parsed()) run_sideinfo(si, g);
        if (c_fu->parsed()) run_fuse(fu, g);
        if (c_tm->parsed()) run_tonemap(tm, g);
        if (c_tr->parsed()) run_train(tr, g);
        if (c_ev->parsed()) run_eval(ev, g);
        if (c_mc->parsed()) run_macs(mc, g);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Usage: return 2;
            case ErrorKind::Data: return 3;
            case ErrorKind::Internal: return 4;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
