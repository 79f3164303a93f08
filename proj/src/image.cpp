#include "ihdr/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ihdr/error.hpp"

namespace ihdr {

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    if (width < 0 || height < 0) throw_usage("negative plane dimensions");
}

double Plane::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y)];
}

RgbBuffer::RgbBuffer(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)) * 3, fill) {
    if (width < 0 || height < 0) throw_usage("negative image dimensions");
}

Plane RgbBuffer::channel(int c) const {
    Plane out(width_, height_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) out(x, y) = (*this)(x, y, c);
    return out;
}

void RgbBuffer::set_channel(int c, const Plane& plane) {
    if (plane.width() != width_ || plane.height() != height_) throw_usage("channel shape mismatch");
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) (*this)(x, y, c) = plane(x, y);
}

LdrImage::LdrImage(RgbBuffer pixels, double exposure_time, double ev)
    : pixels_(std::move(pixels)), exposure_time_(exposure_time), ev_(ev) {
    if (!(exposure_time_ > 0.0) || !std::isfinite(exposure_time_))
        throw_usage("exposure_time must be positive, got " + std::to_string(exposure_time_));
    if (pixels_.width() < kMinSide || pixels_.height() < kMinSide)
        throw_usage("LDR image must be at least 8x8, got " + std::to_string(pixels_.width()) + "x" +
                    std::to_string(pixels_.height()));
    for (double v : pixels_.data())
        if (!(v >= 0.0 && v <= 1.0)) throw_usage("LDR pixel value outside [0,1]: " + std::to_string(v));
}

LdrImage LdrImage::with_exposure(double exposure_time, double ev) const {
    return LdrImage(pixels_, exposure_time, ev);
}

HdrImage::HdrImage(RgbBuffer pixels) : pixels_(std::move(pixels)) {
    for (double v : pixels_.data())
        if (!std::isfinite(v) || v < 0.0) throw_usage("HDR pixel must be finite and non-negative");
}

double HdrImage::max_value() const {
    double m = 0.0;
    for (double v : pixels_.data()) m = std::max(m, v);
    return m;
}

Bracket::Bracket(std::vector<LdrImage> frames, std::optional<int> reference_index)
    : frames_(std::move(frames)), reference_index_(reference_index) {
    if (frames_.size() < 2) throw_usage("bracket requires K >= 2 frames, got " + std::to_string(frames_.size()));
    for (const auto& f : frames_)
        if (!f.pixels().same_shape(frames_.front().pixels()))
            throw_data("dimension mismatch between bracket frames: " + std::to_string(frames_.front().width()) + "x" +
                       std::to_string(frames_.front().height()) + " vs " + std::to_string(f.width()) + "x" +
                       std::to_string(f.height()));
    if (reference_index_ && (*reference_index_ < 0 || *reference_index_ >= static_cast<int>(frames_.size())))
        throw_usage("reference_index " + std::to_string(*reference_index_) + " out of range");
}

Plane luma(const RgbBuffer& rgb) {
    Plane out(rgb.width(), rgb.height());
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out(x, y) = kLumaR * rgb(x, y, 0) + kLumaG * rgb(x, y, 1) + kLumaB * rgb(x, y, 2);
    return out;
}

double mean_luminance(const LdrImage& image) {
    const Plane y = luma(image);
    double sum = 0.0;
    for (double v : y.data()) sum += v;
    return sum / static_cast<double>(y.size());
}

double sharpness(const LdrImage& image) {
    const Plane y = luma(image);
    const int w = y.width(), h = y.height();
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double lap = y.clamped(c - 1, r) + y.clamped(c + 1, r) + y.clamped(c, r - 1) +
                               y.clamped(c, r + 1) - 4.0 * y(c, r);
            sum += lap;
            sum_sq += lap * lap;
        }
    }
    const double n = static_cast<double>(w) * h;
    const double mean = sum / n;
    return std::max(0.0, sum_sq / n - mean * mean);
}

}  // namespace ihdr
