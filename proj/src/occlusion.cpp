#include "roiexplain/occlusion.hpp"

#include <atomic>

#include "roiexplain/metrics.hpp"
#include "roiexplain/parallel.hpp"
#include "roiexplain/roi_gate.hpp"

namespace roiexplain::occlusion {

void OcclusionConfig::validate() const {
    if (patch < 1 || stride < 1) fail(ErrorKind::InvalidInput, "occlusion: patch and stride must be >= 1");
    if (fill.kind == Fill::Kind::Constant && (fill.value < 0 || fill.value > 255)) {
        fail(ErrorKind::InvalidInput, "occlusion: fill constant must be within 0..255");
    }
}

OcclusionResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
                    const OcclusionConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    check_engine_inputs(image, predictor, roi);
    const std::uint8_t fill = resolve_fill(cfg.fill, image, opts.background_threshold);
    const auto& info = predictor.info();

    ExplainReport report;
    report.method = Method::Occlusion;
    report.gated = roi.has_value();

    const auto start = Clock::now();
    const Prediction baseline = predictor.segment(image);

    PatchGrid grid = roi::patch_grid(image.width, image.height, cfg.patch, cfg.stride);
    if (roi) grid = roi::gate_patches(std::move(grid), *roi);

    std::vector<std::size_t> work;
    for (std::size_t i = 0; i < grid.total(); ++i) {
        if (grid.retained[i]) work.push_back(i);
    }

    std::vector<double> attribution(work.size(), 0.0);
    std::atomic<std::uint64_t> done{0};
    auto finish_report = [&](std::uint64_t evaluated) {
        report.n_patch = evaluated;
        report.n_patch_full = grid.total();
        report.rho = grid.rho();
        report.flops = metrics::ledger(opts.roi_flops, evaluated + 1, info.flops_per_call);
        report.wall_clock_ms = elapsed_ms(start);
    };

    try {
        parallel_for(work.size(), effective_workers(opts.jobs, info.max_concurrency), [&](std::size_t k) {
            const auto [x0, y0] = grid.positions[work[k]];
            Image occluded = image;
            for (int y = y0; y < y0 + cfg.patch; ++y) {
                for (int x = x0; x < x0 + cfg.patch; ++x) occluded.at(x, y) = fill;
            }
            const Prediction p = predictor.segment(occluded);
            attribution[k] = 1.0 - metrics::dice(p.mask, baseline.mask);
            ++done;
        });
    } catch (const Error& e) {
        finish_report(done.load());
        report.warnings.push_back(std::string("invalid: ") + e.what());
        throw RunFailed(e.what(), report);
    }

    // Index-ordered reduction keeps floating-point sums independent of scheduling.
    FloatMap sum(image.width, image.height, 1, 0.0);
    std::vector<std::uint32_t> coverage(image.pixel_count(), 0);
    for (std::size_t k = 0; k < work.size(); ++k) {
        const auto [x0, y0] = grid.positions[work[k]];
        for (int y = y0; y < y0 + cfg.patch; ++y) {
            for (int x = x0; x < x0 + cfg.patch; ++x) {
                sum.at(x, y) += attribution[k];
                ++coverage[sum.index(x, y)];
            }
        }
    }
    FloatMap mean(image.width, image.height, 1, 0.0);
    for (std::size_t i = 0; i < mean.data.size(); ++i) {
        if (coverage[i] > 0) mean.data[i] = sum.data[i] / coverage[i];
    }
    finish_report(work.size());

    if (roi) {
        const Fidelity f = region_fidelity(image, predictor, baseline.mask, *roi, fill);
        report.dice_vs_baseline = f.dice;
        report.iou_vs_baseline = f.iou;
    }

    OcclusionResult result;
    result.saliency.normalized = min_max_normalize(mean);
    result.saliency.raw = std::move(mean);
    result.saliency.coverage = std::move(coverage);
    result.report = std::move(report);
    result.grid = std::move(grid);
    return result;
}

}  // namespace roiexplain::occlusion
