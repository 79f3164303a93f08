#include "ihdr/fusion/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <json.hpp>

#include "ihdr/error.hpp"
#include "ihdr/io.hpp"

namespace ihdr::fusion {

namespace {

constexpr char kMagic[8] = {'I', 'H', 'D', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view take(std::size_t n) {
        need(n);
        const std::string_view s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw_data("checkpoint truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

nlohmann::json sensor_json(const SensorParams& p) {
    return {{"conversion_gain", p.conversion_gain}, {"quantum_efficiency", p.quantum_efficiency},
            {"dark_current", p.dark_current},       {"read_noise", p.read_noise},
            {"full_well", p.full_well},             {"adc_bits", p.adc_bits},
            {"gamma", p.gamma},                     {"c", p.c}};
}

SensorParams sensor_from_json(const nlohmann::json& j) {
    SensorParams p;
    p.conversion_gain = j.at("conversion_gain").get<double>();
    p.quantum_efficiency = j.at("quantum_efficiency").get<double>();
    p.dark_current = j.at("dark_current").get<double>();
    p.read_noise = j.at("read_noise").get<double>();
    p.full_well = j.at("full_well").get<double>();
    p.adc_bits = j.at("adc_bits").get<int>();
    p.gamma = j.at("gamma").get<double>();
    p.c = j.at("c").get<double>();
    return p;
}

}  // namespace

std::string encode_checkpoint(const FusionModel& model, const ToneNetModel& tonenet) {
    const nlohmann::json config = {
        {"channels", model.config.channels},
        {"output_beta", model.config.output_beta},
        {"ffn_expansion", model.config.ffn_expansion},
        {"tonenet", tonenet.backend == ToneBackend::Learned ? "learned" : "analytic"},
        {"sensor", sensor_json(tonenet.anchor)},
        {"fusion_parameters", model.params.size()},
        {"tonenet_parameters", tonenet.params.size()},
    };
    const std::string cfg = config.dump();
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    put<std::uint64_t>(out, model.params.size() + tonenet.params.size());
    for (double v : model.params.values()) put<float>(out, static_cast<float>(v));
    for (double v : tonenet.params.values()) put<float>(out, static_cast<float>(v));
    put<std::uint32_t>(out, crc32_of(out));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (r.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) throw_data("not a model checkpoint");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw_data("unsupported checkpoint version " + std::to_string(version));
    std::uint32_t stored = 0;
    if (bytes.size() >= sizeof(kMagic) + 12) std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (bytes.size() < sizeof(kMagic) + 12 || crc32_of(bytes.substr(0, bytes.size() - 4)) != stored)
        throw_data("checkpoint checksum mismatch");

    const auto cfg_len = r.get<std::uint32_t>();
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(r.take(cfg_len));
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("checkpoint config is not valid JSON: ") + e.what());
    }

    FusionConfig fc;
    SensorParams sensor;
    bool learned = false;
    std::size_t n_fusion = 0, n_tone = 0;
    try {
        fc.channels = cfg.at("channels").get<std::vector<int>>();
        fc.output_beta = cfg.at("output_beta").get<double>();
        fc.ffn_expansion = cfg.at("ffn_expansion").get<int>();
        learned = cfg.at("tonenet").get<std::string>() == "learned";
        sensor = sensor_from_json(cfg.at("sensor"));
        n_fusion = cfg.at("fusion_parameters").get<std::size_t>();
        n_tone = cfg.at("tonenet_parameters").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("checkpoint config incomplete: ") + e.what());
    }

    Checkpoint ck{FusionModel::create(fc, 0), learned ? ToneNetModel::learned(sensor, 0) : ToneNetModel::analytic(sensor)};
    if (ck.model.params.size() != n_fusion || ck.tonenet.params.size() != n_tone)
        throw_data("checkpoint parameter count does not match its architecture");
    const auto count = r.get<std::uint64_t>();
    if (count != n_fusion + n_tone) throw_data("checkpoint parameter count mismatch");
    for (double& v : ck.model.params.values()) v = r.get<float>();
    for (double& v : ck.tonenet.params.values()) v = r.get<float>();
    if (r.pos() + 4 != bytes.size()) throw_data("checkpoint has trailing bytes");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const FusionModel& model, const ToneNetModel& tonenet) {
    write_file_atomic(path, encode_checkpoint(model, tonenet));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw_data("model not found: " + path.string());
    return decode_checkpoint(read_file(path));
}

}  // namespace ihdr::fusion
