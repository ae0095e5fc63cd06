#pragma once

#include "roiexplain/raster.hpp"

namespace roiexplain::superpixel {

struct FelzConfig {
    double scale = 100.0;
    double sigma = 0.5;
    int min_size = 50;

    void validate() const;
};

/// Graph-based segmentation (Felzenszwalb & Huttenlocher) of a grayscale image.
///
/// The image is smoothed with a Gaussian of `sigma` (intensities kept on the
/// 0..255 scale), an 8-connected grid graph is built with absolute intensity
/// differences as edge weights, and edges are processed in ascending
/// (weight, source, target) order. Two components merge when the edge weight
/// is strictly below min(Int(C) + scale/|C|) over both sides. A second pass
/// over the same edge order merges any component smaller than `min_size`.
///
/// Labels are 1..K, numbered by first appearance in row-major order.
LabelMap felzenszwalb(const Image& gray, const FelzConfig& cfg);

/// Zeroes labels outside the ROI, splits segments the ROI boundary cuts into
/// 4-connected pieces, and relabels the survivors 1..K in row-major
/// first-appearance order. Segments lying fully inside the ROI stay whole.
LabelMap restrict_to_roi(const LabelMap& labels, const BinaryMask& roi);

/// Separable Gaussian blur with reflect borders, kernel truncated at
/// `truncate` standard deviations. sigma <= 0 returns the input unchanged.
FloatMap gaussian_reflect(const FloatMap& src, double sigma, double truncate = 4.0);

}  // namespace roiexplain::superpixel
