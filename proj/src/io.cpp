#include "ihdr/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ihdr/error.hpp"

namespace ihdr {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_data("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw_data("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw_data("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("file not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- PFM -------------------------------------------------------------------

namespace {

// Header tokens are separated by arbitrary whitespace; the payload starts
// after exactly one whitespace byte following the scale token.
struct PfmCursor {
    std::string_view bytes;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    }
    std::string token() {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw_data("malformed PFM header: truncated");
        return std::string(bytes.substr(start, pos - start));
    }
};

float load_float(const char* p, bool little_endian) {
    std::uint32_t bits;
    std::memcpy(&bits, p, 4);
    const bool host_little = std::endian::native == std::endian::little;
    if (little_endian != host_little) bits = __builtin_bswap32(bits);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

HdrImage decode_pfm(std::string_view bytes) {
    PfmCursor cur{bytes};
    const std::string magic = cur.token();
    int channels = 0;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw_data("malformed PFM header: bad magic '" + magic + "'");

    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(cur.token());
        height = std::stoi(cur.token());
        scale = std::stod(cur.token());
    } catch (const std::logic_error&) {
        throw_data("malformed PFM header: non-numeric field");
    }
    if (width <= 0 || height <= 0) throw_data("malformed PFM header: bad dimensions");
    if (scale == 0.0 || !std::isfinite(scale)) throw_data("malformed PFM header: bad scale");
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos])))
        throw_data("malformed PFM header: missing separator");
    ++cur.pos;

    const bool little = scale < 0.0;
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() - cur.pos < count * 4) throw_data("malformed PFM: payload truncated");

    RgbBuffer rgb(width, height);
    const char* p = bytes.data() + cur.pos;
    for (int row = 0; row < height; ++row) {
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c, p += 4) {
                const float v = load_float(p, little);
                if (std::isnan(v)) throw_data("PFM payload contains NaN");
                if (!std::isfinite(v)) throw_data("PFM payload contains infinity");
                if (v < 0.0f) throw_data("PFM payload contains negative irradiance");
                if (channels == 3) {
                    rgb(x, y, c) = v;
                } else {
                    rgb(x, y, 0) = rgb(x, y, 1) = rgb(x, y, 2) = v;
                }
            }
        }
    }
    return HdrImage(std::move(rgb));
}

HdrImage read_pfm(const fs::path& path) {
    if (!fs::exists(path)) throw_data("PFM not found: " + path.string());
    return decode_pfm(read_file(path));
}

std::string encode_pfm(const HdrImage& image) {
    const int w = image.width(), h = image.height();
    std::string out = "PF\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
    const std::size_t header = out.size();
    out.resize(header + static_cast<std::size_t>(w) * h * 12);
    char* p = out.data() + header;
    for (int row = 0; row < h; ++row) {
        const int y = h - 1 - row;
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c, p += 4) {
                const float v = static_cast<float>(image(x, y, c));
                std::uint32_t bits;
                std::memcpy(&bits, &v, 4);
                if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
                std::memcpy(p, &bits, 4);
            }
        }
    }
    return out;
}

void write_pfm(const HdrImage& image, const fs::path& path) { write_file_atomic(path, encode_pfm(image)); }

// ---- PNG -------------------------------------------------------------------

std::uint16_t quantize16(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::floor(clamped * 65535.0 + 0.5));
}

namespace {

struct PngReadState {
    std::string_view bytes;
    std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->bytes.size() - st->pos < length) png_error(png, "truncated PNG stream");
    std::memcpy(out, st->bytes.data() + st->pos, length);
    st->pos += length;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) {
    throw Error(ErrorKind::Data, std::string("PNG error: ") + msg);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::string encode_png(int width, int height, int channels, int bit_depth, const std::vector<std::uint16_t>& codes) {
    std::string out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    if (!png) throw_internal("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                     channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const int bytes_per_sample = bit_depth / 8;
        std::vector<png_byte> row(static_cast<std::size_t>(width) * channels * bytes_per_sample);
        for (int y = 0; y < height; ++y) {
            for (int i = 0; i < width * channels; ++i) {
                const std::uint16_t code = codes[static_cast<std::size_t>(y) * width * channels + i];
                if (bytes_per_sample == 2) {
                    row[2 * i] = static_cast<png_byte>(code >> 8);
                    row[2 * i + 1] = static_cast<png_byte>(code & 0xff);
                } else {
                    row[i] = static_cast<png_byte>(code);
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace

RgbBuffer read_png(const fs::path& path) {
    if (!fs::exists(path)) throw_data("PNG not found: " + path.string());
    const std::string bytes = read_file(path);
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw_data("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    if (!png) throw_internal("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngReadState state{bytes, 0};
    RgbBuffer rgb;
    try {
        png_set_read_fn(png, &state, png_read_from_memory);
        png_read_info(png, info);
        const int bit_depth = png_get_bit_depth(png, info);
        const int color_type = png_get_color_type(png, info);
        if (color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        } else if (bit_depth != 8 && bit_depth != 16) {
            throw_data("unsupported PNG bit depth " + std::to_string(bit_depth) + " (expected 8 or 16)");
        }
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        png_read_update_info(png, info);

        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int depth = png_get_bit_depth(png, info);
        const int channels = png_get_channels(png, info);
        if (channels != 3) throw_data("unexpected PNG channel layout");
        const double max_code = depth == 16 ? 65535.0 : 255.0;
        std::vector<png_byte> row(png_get_rowbytes(png, info));
        rgb = RgbBuffer(width, height);
        for (int y = 0; y < height; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (int x = 0; x < width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const std::size_t i = static_cast<std::size_t>(x) * 3 + c;
                    const unsigned code = depth == 16 ? (unsigned(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
                    rgb(x, y, c) = code / max_code;
                }
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return rgb;
}

void write_png16(const RgbBuffer& image, const fs::path& path) {
    std::vector<std::uint16_t> codes(image.size());
    const auto data = image.data();
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = quantize16(data[i]);
    write_file_atomic(path, encode_png(image.width(), image.height(), 3, 16, codes));
}

void write_mask_png(const Plane& mask, const fs::path& path) {
    std::vector<std::uint16_t> codes(mask.size());
    const auto data = mask.data();
    for (std::size_t i = 0; i < codes.size(); ++i)
        codes[i] = static_cast<std::uint16_t>(std::floor(std::clamp(data[i], 0.0, 1.0) * 255.0 + 0.5));
    write_file_atomic(path, encode_png(mask.width(), mask.height(), 1, 8, codes));
}

// ---- Manifest ----------------------------------------------------------------

BracketManifest parse_manifest(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw_data(std::string("malformed manifest JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array())
        throw_data("malformed manifest JSON: expected object with a 'frames' array");

    BracketManifest m;
    std::set<std::string> seen;
    try {
        for (const auto& f : doc["frames"]) {
            ManifestFrame frame;
            frame.path = f.at("path").get<std::string>();
            frame.ev = f.value("ev", 0.0);
            frame.exposure_time = f.at("exposure_time").get<double>();
            if (!seen.insert(frame.path).second) throw_data("manifest lists frame path twice: " + frame.path);
            m.frames.push_back(std::move(frame));
        }
        if (doc.contains("reference_index") && !doc["reference_index"].is_null())
            m.reference_index = doc["reference_index"].get<int>();
        if (doc.contains("ground_truth") && !doc["ground_truth"].is_null())
            m.ground_truth = doc["ground_truth"].get<std::string>();
    } catch (const json::exception& e) {
        throw_data(std::string("malformed manifest JSON: ") + e.what());
    }
    return m;
}

std::string manifest_to_json(const BracketManifest& manifest) {
    json doc;
    doc["frames"] = json::array();
    for (const auto& f : manifest.frames)
        doc["frames"].push_back({{"path", f.path}, {"ev", f.ev}, {"exposure_time", f.exposure_time}});
    if (manifest.reference_index) doc["reference_index"] = *manifest.reference_index;
    if (manifest.ground_truth) doc["ground_truth"] = *manifest.ground_truth;
    return doc.dump(2) + "\n";
}

Bracket load_bracket(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) throw_data("manifest not found: " + manifest_path.string());
    const BracketManifest m = parse_manifest(read_file(manifest_path));
    if (m.frames.size() < 2)
        throw_data("bracket requires K >= 2 frames, manifest lists " + std::to_string(m.frames.size()));

    const fs::path base = manifest_path.parent_path();
    std::vector<LdrImage> frames;
    frames.reserve(m.frames.size());
    for (const auto& f : m.frames) {
        const fs::path p = base / f.path;
        if (!fs::exists(p)) throw_data("frame not found: " + p.string());
        RgbBuffer rgb = read_png(p);
        if (!frames.empty() && !rgb.same_shape(frames.front().pixels()))
            throw_data("dimension mismatch between bracket frames: " + std::to_string(frames.front().width()) + "x" +
                       std::to_string(frames.front().height()) + " vs " + std::to_string(rgb.width()) + "x" +
                       std::to_string(rgb.height()));
        if (!(f.exposure_time > 0.0)) throw_data("non-positive exposure_time for frame " + f.path);
        if (rgb.width() < LdrImage::kMinSide || rgb.height() < LdrImage::kMinSide)
            throw_data("frame smaller than 8x8: " + f.path);
        frames.emplace_back(std::move(rgb), f.exposure_time, f.ev);
    }
    if (m.reference_index && (*m.reference_index < 0 || *m.reference_index >= static_cast<int>(frames.size())))
        throw_data("reference_index out of range: " + std::to_string(*m.reference_index));
    return Bracket(std::move(frames), m.reference_index);
}

fs::path save_bracket(const Bracket& bracket, const fs::path& dir, const std::optional<std::string>& ground_truth) {
    fs::create_directories(dir);
    BracketManifest m;
    for (std::size_t i = 0; i < bracket.size(); ++i) {
        const std::string name = "frame_" + std::to_string(i) + ".png";
        write_png16(bracket[i], dir / name);
        m.frames.push_back({name, bracket[i].ev(), bracket[i].exposure_time()});
    }
    m.reference_index = bracket.reference_index();
    m.ground_truth = ground_truth;
    const fs::path manifest_path = dir / "manifest.json";
    write_file_atomic(manifest_path, manifest_to_json(m));
    return manifest_path;
}

}  // namespace ihdr
