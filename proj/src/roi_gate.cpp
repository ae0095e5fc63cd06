#include "roiexplain/roi_gate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace roiexplain::roi {

void RoiConfig::validate() const {
    if (!(gauss_sigma >= 0.0)) fail(ErrorKind::InvalidInput, "roi: sigma must be >= 0");
    if (top_fraction) {
        if (!(*top_fraction > 0.0 && *top_fraction <= 1.0)) {
            fail(ErrorKind::InvalidInput, "roi: top fraction must be within (0,1]");
        }
    } else if (!(threshold > 0.0 && threshold < 1.0)) {
        fail(ErrorKind::InvalidInput, "roi: threshold must be within (0,1)");
    }
}

FloatMap smooth_truncated(const FloatMap& map, double sigma) {
    if (!(sigma > 0.0)) return map;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    }

    auto pass = [&](const FloatMap& src, bool horizontal) {
        FloatMap dst(src.width, src.height, 1, 0.0);
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                double acc = 0.0, weight = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int sx = horizontal ? x + k : x;
                    const int sy = horizontal ? y : y + k;
                    if (!src.contains(sx, sy)) continue;
                    const double wk = kernel[static_cast<std::size_t>(k + radius)];
                    acc += wk * src.at(sx, sy);
                    weight += wk;
                }
                dst.at(x, y) = acc / weight;
            }
        }
        return dst;
    };
    return pass(pass(map, true), false);
}

BinaryMask binarize_importance(const FloatMap& importance, const RoiConfig& cfg) {
    cfg.validate();
    if (importance.width < 1 || importance.height < 1 ||
        importance.data.size() != importance.pixel_count()) {
        fail(ErrorKind::InvalidInput, "importance map: dimension mismatch");
    }
    for (double v : importance.data) {
        if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "importance map: non-finite value");
    }
    const auto [lo, hi] = std::minmax_element(importance.data.begin(), importance.data.end());
    if (*lo == *hi && !cfg.top_fraction) {
        fail(ErrorKind::Degenerate, "degenerate-importance: constant importance map");
    }

    const FloatMap smooth = smooth_truncated(min_max_normalize(importance), cfg.gauss_sigma);
    BinaryMask mask(importance.width, importance.height);

    if (cfg.top_fraction) {
        const std::size_t n = smooth.data.size();
        // ceil(f * n), guarding against f * n landing one ulp above an integer.
        const double exact = *cfg.top_fraction * static_cast<double>(n);
        const double nearest = std::round(exact);
        auto keep = static_cast<std::size_t>(std::abs(exact - nearest) <= 1e-9 * static_cast<double>(n)
                                                 ? nearest
                                                 : std::ceil(exact));
        keep = std::clamp<std::size_t>(keep, 1, n);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return smooth.data[a] > smooth.data[b]; });
        for (std::size_t k = 0; k < keep; ++k) mask.data[order[k]] = 1;
    } else {
        for (std::size_t i = 0; i < smooth.data.size(); ++i) {
            mask.data[i] = smooth.data[i] >= cfg.threshold ? 1 : 0;
        }
    }
    return mask;
}

BinaryMask resize_mask_nn(const BinaryMask& mask, int target_width, int target_height) {
    validate(mask);
    if (target_width < 1 || target_height < 1) fail(ErrorKind::InvalidInput, "resize_mask_nn: zero target size");
    BinaryMask out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * mask.height / target_height);
        for (int x = 0; x < target_width; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * mask.width / target_width);
            out.at(x, y) = mask.at(sx, sy) != 0 ? 1 : 0;
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius <= 0) return mask;
    const int w = mask.width, h = mask.height;
    // Separable max filter.
    BinaryMask rows(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius); ++k) rows.at(k, y) = 1;
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!rows.at(x, y)) continue;
            for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius); ++k) out.at(x, k) = 1;
        }
    }
    return out;
}

PatchGrid patch_grid(int width, int height, int patch, int stride) {
    if (width < 1 || height < 1) fail(ErrorKind::InvalidInput, "patch_grid: empty image");
    if (patch < 1 || stride < 1) fail(ErrorKind::InvalidInput, "patch_grid: patch and stride must be >= 1");
    if (patch > std::min(width, height)) {
        fail(ErrorKind::InvalidInput, "patch_grid: patch " + std::to_string(patch) +
                                          " larger than image " + std::to_string(width) + "x" +
                                          std::to_string(height));
    }
    PatchGrid grid;
    grid.image_width = width;
    grid.image_height = height;
    grid.patch_size = patch;
    grid.stride = stride;
    for (int y = 0; y + patch <= height; y += stride) {
        for (int x = 0; x + patch <= width; x += stride) grid.positions.push_back({x, y});
    }
    grid.retained.assign(grid.positions.size(), 1);
    return grid;
}

PatchGrid gate_patches(PatchGrid grid, const BinaryMask& roi) {
    if (roi.width != grid.image_width || roi.height != grid.image_height) {
        fail(ErrorKind::InvalidInput, "gate_patches: ROI does not match the grid's image size");
    }
    // Summed-area table for O(1) rectangle counts.
    const int w = roi.width, h = roi.height;
    std::vector<std::uint32_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto s = [&](int x, int y) -> std::uint32_t& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            s(x + 1, y + 1) = (roi.at(x, y) != 0) + s(x, y + 1) + s(x + 1, y) - s(x, y);
        }
    }
    const int p = grid.patch_size;
    for (std::size_t i = 0; i < grid.positions.size(); ++i) {
        const auto [x, y] = grid.positions[i];
        const std::uint32_t inside = s(x + p, y + p) - s(x, y + p) - s(x + p, y) + s(x, y);
        grid.retained[i] = inside > 0 ? 1 : 0;
    }
    return grid;
}

BinaryMask retained_area(const PatchGrid& grid) {
    BinaryMask area(grid.image_width, grid.image_height);
    for (std::size_t i = 0; i < grid.positions.size(); ++i) {
        if (!grid.retained[i]) continue;
        const auto [x0, y0] = grid.positions[i];
        for (int y = y0; y < y0 + grid.patch_size; ++y) {
            for (int x = x0; x < x0 + grid.patch_size; ++x) area.at(x, y) = 1;
        }
    }
    return area;
}

}  // namespace roiexplain::roi
