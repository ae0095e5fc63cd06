#pragma once

// Shared raster types. Pixel order is row-major with the origin at the top-left.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roiexplain/error.hpp"

namespace roiexplain {

template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, int c = 1, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}
    Raster(int w, int h, int c, std::vector<T> values)
        : width(w), height(h), channels(c), data(std::move(values)) {}

    [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    [[nodiscard]] bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }

    T& at(int x, int y, int c = 0) { return data[index(x, y) * channels + c]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y) * channels + c]; }

    template <typename U>
    [[nodiscard]] bool same_shape(const Raster<U>& other) const {
        return width == other.width && height == other.height;
    }

    bool operator==(const Raster&) const = default;
};

/// 8-bit image, 1 (grayscale) or 3 (RGB, interleaved) channels.
struct Image : Raster<std::uint8_t> {
    using Raster::Raster;
    bool operator==(const Image&) const = default;
};

/// Unit-normalized float image; every value lies in [0,1].
struct FloatImage : Raster<float> {
    using Raster::Raster;
    bool operator==(const FloatImage&) const = default;
};

/// Single-channel float raster with no range restriction (importance maps, accumulators).
struct FloatMap : Raster<double> {
    using Raster::Raster;
    bool operator==(const FloatMap&) const = default;
};

/// Per-pixel {0,1} raster.
struct BinaryMask : Raster<std::uint8_t> {
    using Raster::Raster;
    bool operator==(const BinaryMask&) const = default;

    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty() const { return count() == 0; }
};

/// Superpixel labels. After ROI restriction 0 marks pixels outside the ROI and
/// the remaining labels are the contiguous range 1..K.
struct LabelMap : Raster<std::int32_t> {
    using Raster::Raster;
    bool operator==(const LabelMap&) const = default;

    [[nodiscard]] int max_label() const;
};

struct SaliencyMap {
    FloatMap raw;
    FloatMap normalized;
    std::vector<std::uint32_t> coverage;

    [[nodiscard]] int width() const { return raw.width; }
    [[nodiscard]] int height() const { return raw.height; }
};

struct PatchPosition {
    int x = 0;
    int y = 0;
    bool operator==(const PatchPosition&) const = default;
};

struct PatchGrid {
    int image_width = 0;
    int image_height = 0;
    int patch_size = 0;
    int stride = 0;
    std::vector<PatchPosition> positions;
    std::vector<std::uint8_t> retained;

    [[nodiscard]] std::size_t total() const { return positions.size(); }
    [[nodiscard]] std::size_t retained_count() const;
    /// retained / total; 0 when nothing is retained.
    [[nodiscard]] double rho() const;
};

enum class Method { Occlusion, Rise, Lime };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct FlopsLedger {
    std::uint64_t roi_flops = 0;
    std::uint64_t calls = 0;
    std::uint64_t flops_per_call = 0;
    std::uint64_t total = 0;

    bool operator==(const FlopsLedger&) const = default;
};

struct ExplainReport {
    Method method = Method::Occlusion;
    bool gated = false;
    std::uint64_t n_patch = 0;
    std::uint64_t n_patch_full = 0;
    double rho = 0.0;
    double wall_clock_ms = 0.0;
    FlopsLedger flops;
    double dice_vs_baseline = 1.0;
    double iou_vs_baseline = 1.0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Validation throws Error(InvalidInput) describing the first violated invariant.
void validate(const Image& image);
void validate(const FloatImage& image);
void validate(const BinaryMask& mask);

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorKind::InvalidInput,
             std::string(what) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                 std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                 std::to_string(b.height) + ")");
    }
}

FloatImage to_float(const Image& image);
/// Rounds half up and clamps to 0..255.
Image to_u8(const FloatImage& image);

/// Min-max normalization into [0,1]; a constant input maps to all zeros.
FloatMap min_max_normalize(const FloatMap& map);

}  // namespace roiexplain
