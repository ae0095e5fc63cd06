#pragma once

#include <optional>

#include "roiexplain/raster.hpp"

namespace roiexplain::roi {

struct RoiConfig {
    double gauss_sigma = 2.0;
    double threshold = 0.5;
    std::optional<double> top_fraction;  // overrides threshold when set

    void validate() const;
};

/// Min-max normalize, smooth (Gaussian truncated at 3 sigma, weights
/// renormalized over in-image taps), then select pixels >= threshold, or the
/// ceil(top_fraction * N) highest pixels (ties by row-major index).
BinaryMask binarize_importance(const FloatMap& importance, const RoiConfig& cfg);

/// Gaussian used by binarize_importance; exposed for tests.
FloatMap smooth_truncated(const FloatMap& map, double sigma);

BinaryMask resize_mask_nn(const BinaryMask& mask, int target_width, int target_height);

/// Chebyshev (square) dilation by `radius` pixels.
BinaryMask dilate(const BinaryMask& mask, int radius);

PatchGrid patch_grid(int width, int height, int patch, int stride);

/// Marks a patch retained iff its rectangle shares at least one pixel with the ROI.
PatchGrid gate_patches(PatchGrid grid, const BinaryMask& roi);

/// Patch rectangles of the retained entries, as a mask (union).
BinaryMask retained_area(const PatchGrid& grid);

}  // namespace roiexplain::roi
