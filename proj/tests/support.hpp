#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "ihdr/image.hpp"

namespace ihdr::test {

inline RgbBuffer filled(int w, int h, double r, double g, double b) {
    RgbBuffer px(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            px(x, y, 0) = r;
            px(x, y, 1) = g;
            px(x, y, 2) = b;
        }
    return px;
}

inline RgbBuffer generate(int w, int h, const std::function<double(int, int, int)>& f) {
    RgbBuffer px(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) px(x, y, c) = f(x, y, c);
    return px;
}

/// Uniform noise in [lo, hi).
inline RgbBuffer noise(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    RgbBuffer px(w, h);
    for (double& v : px.data()) v = u(rng);
    return px;
}

inline double max_abs_diff(const RgbBuffer& a, const RgbBuffer& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ihdr_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace ihdr::test
