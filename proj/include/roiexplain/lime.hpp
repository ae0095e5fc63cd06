#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "roiexplain/engine.hpp"

namespace roiexplain::lime {

struct LimeConfig {
    std::size_t n_samples = 300;
    std::vector<double> scales{50.0, 100.0, 200.0};
    double felz_sigma = 0.5;
    int min_size = 50;
    double kernel_width = 0.25;
    double ridge_lambda = 0.01;
    Fill fill;
    std::uint64_t seed = 0;

    void validate() const;
};

/// n x k matrix of superpixel on/off flags, row-major.
struct AblationMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;

    [[nodiscard]] std::uint8_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
};

/// i.i.d. Bernoulli(0.5) entries; row 0 is forced all-ones. Row r draws from
/// RandomStream(seed, r).
AblationMatrix sample_ablations(std::size_t k, std::size_t n, std::uint64_t seed);

/// Replaces superpixel j (label j, z[j-1] == 0) with `fill`. Label-0 pixels
/// are never touched. z must hold one entry per label 1..max_label.
Image render_ablation(const Image& image, const LabelMap& labels, std::span<const std::uint8_t> z,
                      std::uint8_t fill);

/// Weighted ridge regression with an intercept absorbed by weighted
/// centering of Z and the scores: solves (Zcᵀ W Zc + λI) β = Zcᵀ W sc.
/// Throws Error(Degenerate) "singular-fit" when the system is singular.
std::vector<double> fit_weighted_ridge(const AblationMatrix& z, std::span<const double> scores,
                                       std::span<const double> weights, double lambda);

/// Sample weight exp(-d²/kernel_width²), d the fraction of disabled superpixels.
std::vector<double> kernel_weights(const AblationMatrix& z, double kernel_width);

std::vector<double> fit_surrogate(const AblationMatrix& z, std::span<const double> scores,
                                  double kernel_width, double lambda);

struct ScaleResult {
    double scale = 0.0;
    int regions = 0;
    std::vector<double> coefficients;
    FloatMap map;  // min-max over labelled pixels, 0 elsewhere
};

struct LimeResult {
    SaliencyMap saliency;
    ExplainReport report;
    std::vector<ScaleResult> scales;
};

/// Multi-scale superpixel ablation. For every scale: Felzenszwalb partition
/// (ROI-restricted when an ROI is given), sampled ablations scored by Dice
/// against the baseline, surrogate fit, and coefficients painted back.
/// The fused raw map is the mean of the per-scale maps.
LimeResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const LimeConfig& cfg, const RunOptions& opts = {});

}  // namespace roiexplain::lime
