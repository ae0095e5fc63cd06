#pragma once

// Adaptive contrast enhancement producing standardized grayscale inputs:
// grayscale -> area resize -> background mask -> foreground percentile
// stretch -> CLAHE -> selective blend (background pixels kept verbatim).

#include <array>
#include <cstdint>
#include <vector>

#include "roiexplain/raster.hpp"

namespace roiexplain::preprocess {

struct TileGrid {
    int rows = 8;
    int cols = 8;
};

struct PreprocessConfig {
    int background_threshold = 20;  // pixels strictly below are background
    double pct_low = 5.0;
    double pct_high = 95.0;
    double clahe_clip = 2.0;
    TileGrid tile_grid;
    int target_size = 224;

    void validate() const;
};

/// BT.601 luma, Y = 0.299R + 0.587G + 0.114B rounded half up.
Image to_grayscale(const Image& rgb);

/// Area (box) resampling to target x target. Each output pixel is the
/// exact area-weighted mean of the source pixels its footprint covers,
/// rounded half up.
Image resize_area(const Image& image, int target);

/// 1 where I < t_bg (background), 0 elsewhere.
BinaryMask background_mask(const Image& gray, int t_bg);

struct PercentileBounds {
    int low = 0;
    int high = 0;
    bool operator==(const PercentileBounds&) const = default;
};

/// Nearest-rank percentiles (rank = ceil(p/100 * n), at least 1) of the
/// foreground pixels, i.e. those with mask == 0.
PercentileBounds percentile_bounds(const Image& gray, const BinaryMask& mask, double pct_low,
                                   double pct_high);

/// Intensity map for a single value. Values at or below `low` go to 0, at or
/// above `high` to 255, linear (rounded half up) in between.
std::uint8_t stretch_value(int value, int low, int high);
Image linear_stretch(const Image& gray, int low, int high);

/// Eq.-5 style clipping of one tile histogram.
struct ClippedHistogram {
    std::array<double, 256> bins{};
    double clip_limit = 0.0;
    double redistributed_per_bin = 0.0;
};

/// C = clip * n_pixels / 256.
double clip_limit(double clip, std::size_t n_pixels);
ClippedHistogram clip_histogram(const std::array<std::uint32_t, 256>& hist, double clip);

struct TileInfo {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open pixel bounds
    std::array<std::uint32_t, 256> histogram{};
    ClippedHistogram clipped;
    std::array<double, 256> mapping{};  // equalized level per input level, unrounded
};

/// Per-tile histograms and equalization maps, row-major over the grid.
std::vector<TileInfo> clahe_tiles(const Image& gray, double clip, TileGrid grid);

Image clahe(const Image& gray, double clip, TileGrid grid);

Image enhance(const Image& image, const PreprocessConfig& cfg);

}  // namespace roiexplain::preprocess
