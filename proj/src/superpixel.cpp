#include "roiexplain/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace roiexplain::superpixel {

namespace {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    std::size_t unite(std::size_t a, std::size_t b) {
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

    std::size_t size(std::size_t root) const { return size_[root]; }
    double internal(std::size_t root) const { return internal_[root]; }
    void set_internal(std::size_t root, double v) { internal_[root] = v; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::vector<double> internal_;
};

struct Edge {
    double weight;
    std::uint32_t a;
    std::uint32_t b;
};

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    // Period of the half-sample symmetric extension is 2n.
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma, double truncate) {
    const int radius = static_cast<int>(truncate * sigma + 0.5);
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

}  // namespace

void FelzConfig::validate() const {
    if (!(scale > 0.0)) fail(ErrorKind::InvalidInput, "felzenszwalb: scale must be > 0");
    if (!(sigma >= 0.0)) fail(ErrorKind::InvalidInput, "felzenszwalb: sigma must be >= 0");
    if (min_size < 1) fail(ErrorKind::InvalidInput, "felzenszwalb: min_size must be >= 1");
}

FloatMap gaussian_reflect(const FloatMap& src, double sigma, double truncate) {
    if (!(sigma > 0.0)) return src;
    const auto kernel = gaussian_kernel(sigma, truncate);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = src.width, h = src.height;

    FloatMap tmp(w, h, 1, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * src.at(reflect_index(x + k, w), y);
            }
            tmp.at(x, y) = acc;
        }
    }
    FloatMap out(w, h, 1, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(x, reflect_index(y + k, h));
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

LabelMap felzenszwalb(const Image& gray, const FelzConfig& cfg) {
    cfg.validate();
    validate(gray);
    if (gray.channels != 1) fail(ErrorKind::InvalidInput, "felzenszwalb: expected grayscale input");

    const int w = gray.width, h = gray.height;
    FloatMap intensity(w, h, 1, 0.0);
    std::transform(gray.data.begin(), gray.data.end(), intensity.data.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v); });
    const FloatMap smooth = gaussian_reflect(intensity, cfg.sigma);

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(w) * h * 4);
    auto add = [&](int x0, int y0, int x1, int y1) {
        const auto a = static_cast<std::uint32_t>(smooth.index(x0, y0));
        const auto b = static_cast<std::uint32_t>(smooth.index(x1, y1));
        edges.push_back({std::abs(smooth.data[a] - smooth.data[b]), a, b});
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) add(x, y, x + 1, y);
            if (y + 1 < h) add(x, y, x, y + 1);
            if (x + 1 < w && y + 1 < h) add(x, y, x + 1, y + 1);
            if (x > 0 && y + 1 < h) add(x, y, x - 1, y + 1);
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
        return std::tie(l.weight, l.a, l.b) < std::tie(r.weight, r.a, r.b);
    });

    DisjointSet sets(gray.pixel_count());
    for (const Edge& e : edges) {
        const std::size_t ra = sets.find(e.a), rb = sets.find(e.b);
        if (ra == rb) continue;
        const double ta = sets.internal(ra) + cfg.scale / static_cast<double>(sets.size(ra));
        const double tb = sets.internal(rb) + cfg.scale / static_cast<double>(sets.size(rb));
        if (e.weight < std::min(ta, tb)) {
            // Edges arrive in ascending order, so this edge is the new maximum
            // of the merged component's minimum spanning tree.
            sets.set_internal(sets.unite(ra, rb), e.weight);
        }
    }
    const auto min_size = static_cast<std::size_t>(cfg.min_size);
    for (const Edge& e : edges) {
        const std::size_t ra = sets.find(e.a), rb = sets.find(e.b);
        if (ra == rb) continue;
        if (sets.size(ra) < min_size || sets.size(rb) < min_size) sets.unite(ra, rb);
    }

    LabelMap labels(w, h, 1, 0);
    std::vector<std::int32_t> root_label(gray.pixel_count(), 0);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const std::size_t r = sets.find(i);
        if (root_label[r] == 0) root_label[r] = ++next;
        labels.data[i] = root_label[r];
    }
    return labels;
}

LabelMap restrict_to_roi(const LabelMap& labels, const BinaryMask& roi) {
    require_same_shape(labels, roi, "restrict_to_roi");
    const int w = labels.width, h = labels.height;
    // Segments with any pixel outside the ROI are cut; only those are split
    // into 4-connected pieces. Uncut segments keep their (8-connected) extent.
    std::unordered_set<std::int32_t> cut;
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        if (roi.data[i] == 0) cut.insert(labels.data[i]);
    }
    LabelMap out(w, h, 1, 0);
    std::unordered_map<std::int32_t, std::int32_t> whole;
    std::vector<std::size_t> stack;
    std::int32_t next = 0;
    for (std::size_t start = 0; start < labels.data.size(); ++start) {
        if (roi.data[start] == 0 || out.data[start] != 0) continue;
        const std::int32_t source = labels.data[start];
        if (!cut.contains(source)) {
            auto [it, fresh] = whole.try_emplace(source, 0);
            if (fresh) it->second = ++next;
            out.data[start] = it->second;
            continue;
        }
        const std::int32_t label = ++next;
        out.data[start] = label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(p % static_cast<std::size_t>(w));
            const int y = static_cast<int>(p / static_cast<std::size_t>(w));
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (!labels.contains(nx[k], ny[k])) continue;
                const std::size_t q = labels.index(nx[k], ny[k]);
                if (roi.data[q] == 0 || out.data[q] != 0 || labels.data[q] != source) continue;
                out.data[q] = label;
                stack.push_back(q);
            }
        }
    }
    return out;
}

}  // namespace roiexplain::superpixel
