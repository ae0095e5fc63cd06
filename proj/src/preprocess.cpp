#include "roiexplain/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace roiexplain::preprocess {

namespace {

std::uint8_t round_half_up(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

void require_gray(const Image& image, const char* op) {
    validate(image);
    if (image.channels != 1) {
        fail(ErrorKind::InvalidInput, std::string(op) + ": expected a single-channel image");
    }
}

// Splits [0, extent) into `parts` contiguous ranges at floor(i * extent / parts).
int split_at(int i, int extent, int parts) {
    return static_cast<int>(static_cast<long long>(i) * extent / parts);
}

}  // namespace

void PreprocessConfig::validate() const {
    if (background_threshold < 0 || background_threshold > 255) {
        fail(ErrorKind::InvalidInput, "background threshold must be within 0..255");
    }
    if (!(pct_low >= 0.0 && pct_low < pct_high && pct_high <= 100.0)) {
        fail(ErrorKind::InvalidInput, "percentiles must satisfy 0 <= low < high <= 100");
    }
    if (!(clahe_clip > 0.0)) fail(ErrorKind::InvalidInput, "CLAHE clip must be > 0");
    if (tile_grid.rows < 1 || tile_grid.cols < 1) {
        fail(ErrorKind::InvalidInput, "tile grid must be at least 1x1");
    }
    if (target_size < 1) fail(ErrorKind::InvalidInput, "target size must be >= 1");
}

Image to_grayscale(const Image& rgb) {
    validate(rgb);
    if (rgb.channels != 3) {
        fail(ErrorKind::InvalidInput, "to_grayscale: expected 3 channels, got " +
                                          std::to_string(rgb.channels));
    }
    Image out(rgb.width, rgb.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const unsigned r = rgb.data[3 * i], g = rgb.data[3 * i + 1], b = rgb.data[3 * i + 2];
        // Integer form of 0.299R + 0.587G + 0.114B, rounded half up.
        out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
    return out;
}

Image resize_area(const Image& image, int target) {
    validate(image);
    if (target < 1) fail(ErrorKind::InvalidInput, "resize_area: target must be >= 1");
    const int sw = image.width, sh = image.height, ch = image.channels;
    if (sw == target && sh == target) return image;

    // Work on a grid scaled by target along x (source pixel i spans
    // [i*target, (i+1)*target)) and by sw along x for outputs
    // (output o spans [o*sw, (o+1)*sw)); overlaps are then exact integers.
    struct Span {
        int src;
        long long weight;
    };
    auto footprints = [target](int src_extent) {
        std::vector<std::vector<Span>> spans(static_cast<std::size_t>(target));
        for (int o = 0; o < target; ++o) {
            const long long lo = static_cast<long long>(o) * src_extent;
            const long long hi = lo + src_extent;
            for (int s = static_cast<int>(lo / target); s < src_extent; ++s) {
                const long long s_lo = static_cast<long long>(s) * target;
                const long long s_hi = s_lo + target;
                if (s_lo >= hi) break;
                const long long overlap = std::min(hi, s_hi) - std::max(lo, s_lo);
                if (overlap > 0) spans[static_cast<std::size_t>(o)].push_back({s, overlap});
            }
        }
        return spans;
    };
    const auto xs = footprints(sw);
    const auto ys = footprints(sh);
    // Total weight per output pixel is sw * sh.
    const unsigned long long denom = static_cast<unsigned long long>(sw) * sh;

    Image out(target, target, ch);
    for (int oy = 0; oy < target; ++oy) {
        for (int ox = 0; ox < target; ++ox) {
            for (int c = 0; c < ch; ++c) {
                unsigned long long sum = 0;
                for (const auto& y : ys[static_cast<std::size_t>(oy)]) {
                    for (const auto& x : xs[static_cast<std::size_t>(ox)]) {
                        sum += static_cast<unsigned long long>(y.weight * x.weight) *
                               image.at(x.src, y.src, c);
                    }
                }
                out.at(ox, oy, c) = static_cast<std::uint8_t>((2 * sum + denom) / (2 * denom));
            }
        }
    }
    return out;
}

BinaryMask background_mask(const Image& gray, int t_bg) {
    require_gray(gray, "background_mask");
    BinaryMask mask(gray.width, gray.height);
    std::transform(gray.data.begin(), gray.data.end(), mask.data.begin(),
                   [t_bg](std::uint8_t v) { return static_cast<std::uint8_t>(v < t_bg ? 1 : 0); });
    return mask;
}

PercentileBounds percentile_bounds(const Image& gray, const BinaryMask& mask, double pct_low,
                                   double pct_high) {
    require_gray(gray, "percentile_bounds");
    require_same_shape(gray, mask, "percentile_bounds");

    std::array<std::size_t, 256> hist{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < gray.data.size(); ++i) {
        if (mask.data[i] == 0) {
            ++hist[gray.data[i]];
            ++n;
        }
    }
    if (n == 0) fail(ErrorKind::Degenerate, "percentile_bounds: no foreground pixels");

    auto nearest_rank = [&](double pct) {
        auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
        rank = std::clamp<std::size_t>(rank, 1, n);
        std::size_t seen = 0;
        for (int v = 0; v < 256; ++v) {
            seen += hist[static_cast<std::size_t>(v)];
            if (seen >= rank) return v;
        }
        return 255;
    };
    return {nearest_rank(pct_low), nearest_rank(pct_high)};
}

std::uint8_t stretch_value(int value, int low, int high) {
    if (value <= low) return 0;
    if (value >= high) return 255;
    const int num = 255 * (value - low);
    const int den = high - low;
    return static_cast<std::uint8_t>((2 * num + den) / (2 * den));
}

Image linear_stretch(const Image& gray, int low, int high) {
    require_gray(gray, "linear_stretch");
    if (low > high) fail(ErrorKind::InvalidInput, "linear_stretch: low bound exceeds high bound");
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = stretch_value(v, low, high);
    Image out = gray;
    for (auto& v : out.data) v = lut[v];
    return out;
}

double clip_limit(double clip, std::size_t n_pixels) {
    return clip * static_cast<double>(n_pixels) / 256.0;
}

ClippedHistogram clip_histogram(const std::array<std::uint32_t, 256>& hist, double clip) {
    std::size_t n = 0;
    for (auto h : hist) n += h;

    ClippedHistogram out;
    out.clip_limit = clip_limit(clip, n);
    double excess = 0.0;
    for (auto h : hist) excess += std::max(0.0, static_cast<double>(h) - out.clip_limit);
    // Single redistribution pass; no iterative re-clipping.
    out.redistributed_per_bin = excess / 256.0;
    for (std::size_t b = 0; b < 256; ++b) {
        out.bins[b] = std::min(static_cast<double>(hist[b]), out.clip_limit) + out.redistributed_per_bin;
    }
    return out;
}

std::vector<TileInfo> clahe_tiles(const Image& gray, double clip, TileGrid grid) {
    require_gray(gray, "clahe");
    if (!(clip > 0.0)) fail(ErrorKind::InvalidInput, "clahe: clip must be > 0");
    if (grid.rows < 1 || grid.cols < 1) fail(ErrorKind::InvalidInput, "clahe: empty tile grid");
    if (grid.rows > gray.height || grid.cols > gray.width) {
        fail(ErrorKind::InvalidInput, "clahe: tile-too-large, " + std::to_string(grid.rows) + "x" +
                                          std::to_string(grid.cols) + " grid on " +
                                          std::to_string(gray.width) + "x" +
                                          std::to_string(gray.height) + " image");
    }

    std::vector<TileInfo> tiles(static_cast<std::size_t>(grid.rows) * grid.cols);
    for (int ty = 0; ty < grid.rows; ++ty) {
        for (int tx = 0; tx < grid.cols; ++tx) {
            TileInfo& t = tiles[static_cast<std::size_t>(ty) * grid.cols + tx];
            t.x0 = split_at(tx, gray.width, grid.cols);
            t.x1 = split_at(tx + 1, gray.width, grid.cols);
            t.y0 = split_at(ty, gray.height, grid.rows);
            t.y1 = split_at(ty + 1, gray.height, grid.rows);
            for (int y = t.y0; y < t.y1; ++y) {
                for (int x = t.x0; x < t.x1; ++x) ++t.histogram[gray.at(x, y)];
            }
            t.clipped = clip_histogram(t.histogram, clip);

            std::array<double, 256> cdf{};
            double running = 0.0;
            for (std::size_t b = 0; b < 256; ++b) {
                running += t.clipped.bins[b];
                cdf[b] = running;
            }
            const double cdf_max = cdf[255];
            double cdf_min = cdf_max;
            for (std::size_t b = 0; b < 256; ++b) {
                if (cdf[b] > 0.0) {
                    cdf_min = cdf[b];
                    break;
                }
            }
            const double span = cdf_max - cdf_min;
            for (std::size_t b = 0; b < 256; ++b) {
                t.mapping[b] = span > 0.0
                                   ? std::clamp((cdf[b] - cdf_min) / span * 255.0, 0.0, 255.0)
                                   : static_cast<double>(b);
            }
        }
    }
    return tiles;
}

Image clahe(const Image& gray, double clip, TileGrid grid) {
    const auto tiles = clahe_tiles(gray, clip, grid);

    // Tile centres in pixel coordinates.
    std::vector<double> cx(static_cast<std::size_t>(grid.cols)), cy(static_cast<std::size_t>(grid.rows));
    for (int tx = 0; tx < grid.cols; ++tx) {
        const auto& t = tiles[static_cast<std::size_t>(tx)];
        cx[static_cast<std::size_t>(tx)] = 0.5 * (t.x0 + t.x1 - 1);
    }
    for (int ty = 0; ty < grid.rows; ++ty) {
        const auto& t = tiles[static_cast<std::size_t>(ty) * grid.cols];
        cy[static_cast<std::size_t>(ty)] = 0.5 * (t.y0 + t.y1 - 1);
    }

    // Neighbouring tile pair and interpolation weight along one axis; edges clamp.
    struct Axis {
        int lo, hi;
        double t;
    };
    auto locate = [](const std::vector<double>& centres, double p) -> Axis {
        const int n = static_cast<int>(centres.size());
        if (p <= centres.front()) return {0, 0, 0.0};
        if (p >= centres.back()) return {n - 1, n - 1, 0.0};
        int i = 0;
        while (centres[static_cast<std::size_t>(i + 1)] <= p) ++i;
        const double t = (p - centres[static_cast<std::size_t>(i)]) /
                         (centres[static_cast<std::size_t>(i + 1)] - centres[static_cast<std::size_t>(i)]);
        return {i, i + 1, t};
    };

    std::vector<Axis> ax(static_cast<std::size_t>(gray.width)), ay(static_cast<std::size_t>(gray.height));
    for (int x = 0; x < gray.width; ++x) ax[static_cast<std::size_t>(x)] = locate(cx, x);
    for (int y = 0; y < gray.height; ++y) ay[static_cast<std::size_t>(y)] = locate(cy, y);

    auto map_at = [&](int tx, int ty, std::uint8_t v) {
        return tiles[static_cast<std::size_t>(ty) * grid.cols + tx].mapping[v];
    };

    Image out(gray.width, gray.height, 1);
    for (int y = 0; y < gray.height; ++y) {
        const Axis& vy = ay[static_cast<std::size_t>(y)];
        for (int x = 0; x < gray.width; ++x) {
            const Axis& vx = ax[static_cast<std::size_t>(x)];
            const std::uint8_t v = gray.at(x, y);
            const double top = map_at(vx.lo, vy.lo, v) + vx.t * (map_at(vx.hi, vy.lo, v) - map_at(vx.lo, vy.lo, v));
            const double bottom = map_at(vx.lo, vy.hi, v) + vx.t * (map_at(vx.hi, vy.hi, v) - map_at(vx.lo, vy.hi, v));
            out.at(x, y) = round_half_up(top + vy.t * (bottom - top));
        }
    }
    return out;
}

Image enhance(const Image& image, const PreprocessConfig& cfg) {
    cfg.validate();
    validate(image);
    const Image gray = image.channels == 3 ? to_grayscale(image) : image;
    const Image resized = resize_area(gray, cfg.target_size);
    const BinaryMask background = background_mask(resized, cfg.background_threshold);
    if (background.count() == background.pixel_count()) return resized;

    const auto bounds = percentile_bounds(resized, background, cfg.pct_low, cfg.pct_high);
    const Image stretched = linear_stretch(resized, bounds.low, bounds.high);
    const Image equalized = clahe(stretched, cfg.clahe_clip, cfg.tile_grid);

    Image out = resized;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (background.data[i] == 0) out.data[i] = equalized.data[i];
    }
    validate(out);
    return out;
}

}  // namespace roiexplain::preprocess
