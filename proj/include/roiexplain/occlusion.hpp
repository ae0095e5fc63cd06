#pragma once

#include <optional>

#include "roiexplain/engine.hpp"

namespace roiexplain::occlusion {

struct OcclusionConfig {
    int patch = 64;
    int stride = 32;
    Fill fill;

    void validate() const;
};

struct OcclusionResult {
    SaliencyMap saliency;
    ExplainReport report;
    PatchGrid grid;
};

/// Sliding-window occlusion sensitivity.
///
/// Each evaluated patch is filled, re-segmented, and attributed
/// 1 - Dice(perturbed, baseline). Attributions are summed onto the patch
/// pixels, divided by per-pixel coverage, then min-max normalized. With an
/// ROI, patches sharing no pixel with it are skipped.
OcclusionResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
                    const OcclusionConfig& cfg, const RunOptions& opts = {});

}  // namespace roiexplain::occlusion
