#pragma once

#include <vector>

#include "ihdr/image.hpp"

namespace ihdr {

/// H = L^gamma / t, per channel.
HdrImage pseudo_hdr(const LdrImage& image, double gamma);

struct StructureTensorResult {
    Plane eigen_max;      // larger eigenvalue of GᵀG
    Plane eigen_min;      // smaller eigenvalue, ≥ 0
    Plane orientation;    // angle (radians) of the dominant eigenvector
    Plane edge_map;       // {0,1}
    Plane corner_map;     // {0,1}
    Plane flat_map;       // {0,1}
    Plane reversed_flat;  // 1 - flat_map
};

struct StructureTensorOptions {
    int window = 3;      // odd side of the square aggregation window
    double tau = 1e-3;   // eigenvalue threshold for flat/edge/corner
};

/// Eigen-structure of the windowed gradient Gram matrix of the luma channel.
/// Gradients are central differences with replicate borders.
StructureTensorResult structure_tensor(const LdrImage& image, const StructureTensorOptions& opts = {});
StructureTensorResult structure_tensor(const Plane& gray, const StructureTensorOptions& opts = {});

/// Closed-form eigenvalues of the symmetric matrix [[a, b], [b, c]];
/// returns {max, min} with min clamped to ≥ 0 for PSD input.
struct Eigen2 {
    double max;
    double min;
    double angle;
};
Eigen2 symmetric_eigen2(double a, double b, double c);

struct DifferenceMask {
    Plane mask;
    double threshold = 0.2;
    int blur_radius = 7;
};

/// Per-channel histogram equalisation (256 bins). A constant channel is
/// returned unchanged.
RgbBuffer histogram_equalize(const RgbBuffer& image);

/// Normalised Gaussian kernel of half-width `radius`, sigma = radius / 3.
std::vector<double> gaussian_kernel(int radius);

/// Separable Gaussian blur with replicate borders.
Plane gaussian_blur(const Plane& plane, int radius);
RgbBuffer gaussian_blur(const RgbBuffer& image, int radius);

/// gray(Blur(HistEq(image))).
Plane difference_transform(const RgbBuffer& image, int blur_radius);

/// D = 1 where |T(ref) - T(nonref)| > threshold.
DifferenceMask difference_mask(const LdrImage& ref, const LdrImage& nonref, double threshold = 0.2,
                               int blur_radius = 7);

/// 2×2 max pooling; dimensions must be even.
Plane max_pool2(const Plane& plane);

/// Level 0 is reversed_flat; level l is max-pooled from level l-1.
std::vector<Plane> multiscale_st(const StructureTensorResult& st, int levels = 3);

/// 3×3 Laplacian magnitude map, thresholded. Only used for ablations.
Plane laplacian_edge_map(const LdrImage& image, double threshold);

struct SideInfoOptions {
    double gamma = 2.2;
    StructureTensorOptions st;
    double diff_threshold = 0.2;
    int blur_radius = 7;
};

/// Everything a fusion step consumes for one (reference, non-reference) pair.
struct SideInfoBundle {
    LdrImage ref_ldr;
    LdrImage nonref_ldr;
    HdrImage ref_pseudo_hdr;
    HdrImage nonref_pseudo_hdr;
    StructureTensorResult st;  // of the reference
    DifferenceMask diff;

    int width() const { return ref_ldr.width(); }
    int height() const { return ref_ldr.height(); }
};

SideInfoBundle make_side_info(const LdrImage& ref, const LdrImage& nonref, const SideInfoOptions& opts = {});

}  // namespace ihdr
