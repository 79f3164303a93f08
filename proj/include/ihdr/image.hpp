#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ihdr {

/// Single-channel H×W map of doubles, row-major.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator()(int x, int y) const { return data_[index(x, y)]; }

    /// Replicate-border access.
    double clamped(int x, int y) const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Plane& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Mutable interleaved RGB buffer (H×W×3, row-major). Used to assemble
/// pixels before they are frozen into an LdrImage or HdrImage.
class RgbBuffer {
public:
    RgbBuffer() = default;
    RgbBuffer(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int x, int y, int c) { return data_[index(x, y, c)]; }
    double operator()(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const RgbBuffer& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    Plane channel(int c) const;
    void set_channel(int c, const Plane& plane);

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3 +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Nonlinear-domain frame in [0,1] with its exposure metadata.
/// exposure_time is the scalar t_k used by pseudo-HDR linearisation.
class LdrImage {
public:
    static constexpr int kMinSide = 8;

    /// Validates range, exposure and minimum size; throws Error(Usage) otherwise.
    LdrImage(RgbBuffer pixels, double exposure_time, double ev = 0.0);

    int width() const { return pixels_.width(); }
    int height() const { return pixels_.height(); }
    const RgbBuffer& pixels() const { return pixels_; }
    double operator()(int x, int y, int c) const { return pixels_(x, y, c); }
    double exposure_time() const { return exposure_time_; }
    double ev() const { return ev_; }

    LdrImage with_exposure(double exposure_time, double ev) const;

private:
    RgbBuffer pixels_;
    double exposure_time_;
    double ev_;
};

/// Linear irradiance map; every value finite and non-negative.
class HdrImage {
public:
    explicit HdrImage(RgbBuffer pixels);

    int width() const { return pixels_.width(); }
    int height() const { return pixels_.height(); }
    const RgbBuffer& pixels() const { return pixels_; }
    double operator()(int x, int y, int c) const { return pixels_(x, y, c); }

    double max_value() const;

private:
    RgbBuffer pixels_;
};

/// K ≥ 2 frames of identical size, optionally with a pinned reference.
class Bracket {
public:
    Bracket(std::vector<LdrImage> frames, std::optional<int> reference_index = std::nullopt);

    std::size_t size() const { return frames_.size(); }
    const LdrImage& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<LdrImage>& frames() const { return frames_; }
    std::optional<int> reference_index() const { return reference_index_; }
    int width() const { return frames_.front().width(); }
    int height() const { return frames_.front().height(); }

private:
    std::vector<LdrImage> frames_;
    std::optional<int> reference_index_;
};

/// BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

Plane luma(const RgbBuffer& rgb);
inline Plane luma(const LdrImage& img) { return luma(img.pixels()); }

/// Mean BT.601 luma over all pixels.
double mean_luminance(const LdrImage& image);

/// Variance of the 3×3 Laplacian response of the luma channel
/// (replicate borders).
double sharpness(const LdrImage& image);

}  // namespace ihdr
