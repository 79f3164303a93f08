#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ihdr/image.hpp"

namespace ihdr::nn {

struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense N×C×H×W array of doubles (NCHW, contiguous).
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }

    double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// Pointer to channel plane (n, c).
    double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
    const double* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

    bool all_finite() const;

    static Tensor4 from_rgb(const RgbBuffer& rgb);
    static Tensor4 from_plane(const Plane& plane);
    /// Channels [first, first+3) of sample 0 as an interleaved RGB buffer.
    RgbBuffer to_rgb(int first_channel = 0) const;

private:
    std::size_t offset(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }

    Shape shape_;
    std::vector<double> data_;
};

}  // namespace ihdr::nn
