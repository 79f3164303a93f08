#include "ihdr/nn/tensor.hpp"

#include <cmath>

#include "ihdr/error.hpp"

namespace ihdr::nn {

std::string Shape::str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

bool Tensor4::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor4 Tensor4::from_rgb(const RgbBuffer& rgb) {
    Tensor4 t(Shape{1, 3, rgb.height(), rgb.width()});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < rgb.height(); ++y)
            for (int x = 0; x < rgb.width(); ++x) t.at(0, c, y, x) = rgb(x, y, c);
    return t;
}

Tensor4 Tensor4::from_plane(const Plane& plane) {
    Tensor4 t(Shape{1, 1, plane.height(), plane.width()});
    for (int y = 0; y < plane.height(); ++y)
        for (int x = 0; x < plane.width(); ++x) t.at(0, 0, y, x) = plane(x, y);
    return t;
}

RgbBuffer Tensor4::to_rgb(int first_channel) const {
    if (first_channel + 3 > shape_.c) throw_usage("to_rgb: tensor has only " + std::to_string(shape_.c) + " channels");
    RgbBuffer rgb(shape_.w, shape_.h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < shape_.h; ++y)
            for (int x = 0; x < shape_.w; ++x) rgb(x, y, c) = at(0, first_channel + c, y, x);
    return rgb;
}

}  // namespace ihdr::nn
