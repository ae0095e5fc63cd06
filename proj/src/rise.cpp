#include "roiexplain/rise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "roiexplain/metrics.hpp"
#include "roiexplain/parallel.hpp"
#include "roiexplain/random.hpp"

namespace roiexplain::rise {

void RiseConfig::validate() const {
    if (n_masks < 1) fail(ErrorKind::InvalidInput, "rise: n_masks must be >= 1");
    if (!(p1 > 0.0 && p1 < 1.0)) fail(ErrorKind::InvalidInput, "rise: p1 must be within (0,1)");
    if (grid_rows < 1 || grid_cols < 1) fail(ErrorKind::InvalidInput, "rise: base grid must be at least 1x1");
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct Tap {
    int lo, hi;
    double t;
};

// Half-pixel-centre sampling positions of `src` cells for `dst` outputs.
std::vector<Tap> taps(int src, int dst) {
    std::vector<Tap> out(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
        const int lo = static_cast<int>(std::floor(s));
        const int hi = std::min(lo + 1, src - 1);
        out[static_cast<std::size_t>(d)] = {lo, hi, s - lo};
    }
    return out;
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

SoftMask upsample_cells(const std::vector<std::uint8_t>& cells, int rows, int cols, int out_w, int out_h,
                        int shift_x, int shift_y) {
    if (cells.size() != static_cast<std::size_t>(rows) * cols) {
        fail(ErrorKind::InvalidInput, "rise: cell count does not match the grid");
    }
    const int up_w = out_w + ceil_div(out_w, cols);
    const int up_h = out_h + ceil_div(out_h, rows);
    const auto tx = taps(cols, up_w);
    const auto ty = taps(rows, up_h);
    auto cell = [&](int r, int c) { return static_cast<double>(cells[static_cast<std::size_t>(r) * cols + c]); };

    SoftMask out(out_w, out_h, 1, 0.0);
    for (int y = 0; y < out_h; ++y) {
        const Tap& vy = ty[static_cast<std::size_t>(y + shift_y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& vx = tx[static_cast<std::size_t>(x + shift_x)];
            const double top = lerp(cell(vy.lo, vx.lo), cell(vy.lo, vx.hi), vx.t);
            const double bottom = lerp(cell(vy.hi, vx.lo), cell(vy.hi, vx.hi), vx.t);
            out.at(x, y) = std::clamp(lerp(top, bottom, vy.t), 0.0, 1.0);
        }
    }
    return out;
}

RandomMasks::RandomMasks(RiseConfig cfg, int out_w, int out_h) : cfg_(cfg), out_w_(out_w), out_h_(out_h) {
    // The sampler itself accepts the degenerate densities 0 and 1.
    if (!(cfg_.p1 >= 0.0 && cfg_.p1 <= 1.0)) fail(ErrorKind::InvalidInput, "rise: p1 must be within [0,1]");
    if (cfg_.grid_rows < 1 || cfg_.grid_cols < 1) fail(ErrorKind::InvalidInput, "rise: base grid must be at least 1x1");
    if (out_w < 1 || out_h < 1) fail(ErrorKind::InvalidInput, "rise: empty output size");
}

SoftMask RandomMasks::mask(std::size_t index) const {
    RandomStream rng(cfg_.seed, index);
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(cfg_.grid_rows) * cfg_.grid_cols);
    for (auto& c : cells) c = rng.bernoulli(cfg_.p1) ? 1 : 0;
    int sx = 0, sy = 0;
    if (cfg_.random_shift) {
        sx = static_cast<int>(rng.below(static_cast<std::uint64_t>(ceil_div(out_w_, cfg_.grid_cols))));
        sy = static_cast<int>(rng.below(static_cast<std::uint64_t>(ceil_div(out_h_, cfg_.grid_rows))));
    }
    return upsample_cells(cells, cfg_.grid_rows, cfg_.grid_cols, out_w_, out_h_, sx, sy);
}

SoftMask apply_roi_constraint(SoftMask mask, const BinaryMask& roi) {
    require_same_shape(mask, roi, "apply_roi_constraint");
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        if (roi.data[i] == 0) mask.data[i] = 1.0;
    }
    return mask;
}

Image perturb(const Image& image, const SoftMask& mask) {
    require_same_shape(image, mask, "rise: perturb");
    Image out = image;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double m = mask.data[i / static_cast<std::size_t>(image.channels)];
        out.data[i] = static_cast<std::uint8_t>(std::clamp(std::floor(image.data[i] * m + 0.5), 0.0, 255.0));
    }
    return out;
}

RiseResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const MaskSource& masks, std::uint64_t seed, const RunOptions& opts) {
    check_engine_inputs(image, predictor, roi);
    const auto& info = predictor.info();
    const std::size_t n = masks.size();
    const std::size_t pixels = image.pixel_count();

    ExplainReport report;
    report.method = Method::Rise;
    report.gated = roi.has_value();
    report.seed = seed;

    // Pixels over which the relevance score is averaged.
    std::vector<std::size_t> focus;
    for (std::size_t i = 0; i < pixels; ++i) {
        if (!roi || roi->data[i] != 0) focus.push_back(i);
    }

    const auto start = Clock::now();
    const Prediction baseline = predictor.segment(image);

    std::vector<double> num_fid(pixels, 0.0), num_rel(pixels, 0.0), den(pixels, 0.0);
    std::vector<std::uint32_t> coverage(pixels, 0);

    const unsigned workers = effective_workers(opts.jobs, info.max_concurrency);
    const std::size_t chunk = static_cast<std::size_t>(workers) * 8;
    std::vector<SoftMask> window(chunk);
    std::vector<double> s_fid(chunk), s_rel(chunk);
    std::atomic<std::uint64_t> done{0};

    auto finish_report = [&](std::uint64_t evaluated) {
        report.n_patch = evaluated;
        report.n_patch_full = n;
        report.rho = n == 0 ? 0.0 : static_cast<double>(evaluated) / static_cast<double>(n);
        report.flops = metrics::ledger(opts.roi_flops, evaluated + 1, info.flops_per_call);
        report.wall_clock_ms = elapsed_ms(start);
    };

    for (std::size_t base = 0; base < n; base += chunk) {
        const std::size_t count = std::min(chunk, n - base);
        try {
            parallel_for(count, workers, [&](std::size_t k) {
                SoftMask m = masks.mask(base + k);
                if (roi) m = apply_roi_constraint(std::move(m), *roi);
                const Prediction p = predictor.segment(perturb(image, m));
                s_fid[k] = metrics::dice(p.mask, baseline.mask);
                double rel = 0.0;
                if (!focus.empty()) {
                    for (std::size_t i : focus) rel += p.score_map ? p.score_map->data[i] : p.mask.data[i];
                    rel /= static_cast<double>(focus.size());
                }
                s_rel[k] = rel;
                window[k] = std::move(m);
                ++done;
            });
        } catch (const Error& e) {
            finish_report(done.load());
            report.warnings.push_back(std::string("invalid: ") + e.what());
            throw RunFailed(e.what(), report);
        }
        for (std::size_t k = 0; k < count; ++k) {
            const auto& m = window[k].data;
            for (std::size_t i = 0; i < pixels; ++i) {
                num_fid[i] += s_fid[k] * m[i];
                num_rel[i] += s_rel[k] * m[i];
                den[i] += m[i];
                coverage[i] += m[i] > 0.0;
            }
        }
    }

    FloatMap raw_fid(image.width, image.height, 1, 0.0), raw_rel(image.width, image.height, 1, 0.0);
    for (std::size_t i = 0; i < pixels; ++i) {
        if (den[i] > 0.0) {
            raw_fid.data[i] = num_fid[i] / den[i];
            raw_rel.data[i] = num_rel[i] / den[i];
        }
    }
    finish_report(n);

    if (roi) {
        const Fidelity f = region_fidelity(image, predictor, baseline.mask, *roi,
                                           foreground_mean(image, opts.background_threshold));
        report.dice_vs_baseline = f.dice;
        report.iou_vs_baseline = f.iou;
    }

    RiseResult result;
    result.fidelity.normalized = min_max_normalize(raw_fid);
    result.fidelity.raw = std::move(raw_fid);
    result.fidelity.coverage = coverage;
    result.relevance.normalized = min_max_normalize(raw_rel);
    result.relevance.raw = std::move(raw_rel);
    result.relevance.coverage = std::move(coverage);
    result.report = std::move(report);
    return result;
}

RiseResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const RiseConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const RandomMasks masks(cfg, image.width, image.height);
    return run(image, predictor, roi, masks, cfg.seed, opts);
}

}  // namespace roiexplain::rise
