#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ihdr/image.hpp"

namespace ihdr {

/// Writes bytes to a sibling temp file and renames it over `path`, so a
/// reader never observes a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// ---- PFM -------------------------------------------------------------------

/// Reads "PF" (RGB) or "Pf" (gray, replicated to 3 channels). Either byte
/// order is accepted; rows are stored bottom-to-top.
HdrImage read_pfm(const std::filesystem::path& path);
HdrImage decode_pfm(std::string_view bytes);

/// Writes little-endian "PF" with 32-bit floats.
void write_pfm(const HdrImage& image, const std::filesystem::path& path);
std::string encode_pfm(const HdrImage& image);

// ---- PNG -------------------------------------------------------------------

/// Decodes an 8- or 16-bit PNG to [0,1] (code / (2^bits - 1)). Gray inputs
/// are replicated to RGB; alpha is dropped.
RgbBuffer read_png(const std::filesystem::path& path);

/// 16-bit RGB; codes are floor(v * 65535 + 0.5).
void write_png16(const RgbBuffer& image, const std::filesystem::path& path);
inline void write_png16(const LdrImage& image, const std::filesystem::path& path) {
    write_png16(image.pixels(), path);
}

/// 8-bit gray PNG of a map clamped to [0,1].
void write_mask_png(const Plane& mask, const std::filesystem::path& path);

std::uint16_t quantize16(double v);

// ---- Bracket manifest --------------------------------------------------------

struct ManifestFrame {
    std::string path;
    double ev = 0.0;
    double exposure_time = 1.0;
    bool operator==(const ManifestFrame&) const = default;
};

/// JSON: {"frames":[{"path":..,"ev":..,"exposure_time":..}], "reference_index": k}
/// An optional "ground_truth" entry names a PFM used by training.
struct BracketManifest {
    std::vector<ManifestFrame> frames;
    std::optional<int> reference_index;
    std::optional<std::string> ground_truth;
    bool operator==(const BracketManifest&) const = default;
};

BracketManifest parse_manifest(std::string_view json_text);
std::string manifest_to_json(const BracketManifest& manifest);

/// Loads the manifest and every frame (paths relative to the manifest's
/// directory), validating K ≥ 2 and equal frame dimensions.
Bracket load_bracket(const std::filesystem::path& manifest_path);

/// Writes frame_<i>.png files plus `manifest.json` into `dir`; returns the
/// manifest path.
std::filesystem::path save_bracket(const Bracket& bracket, const std::filesystem::path& dir,
                                   const std::optional<std::string>& ground_truth = std::nullopt);

}  // namespace ihdr
