#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "roiexplain/engine.hpp"

namespace roiexplain::rise {

struct RiseConfig {
    std::size_t n_masks = 2000;
    double p1 = 0.5;
    int grid_rows = 7;
    int grid_cols = 7;
    bool random_shift = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Soft multiplicative mask with values in [0,1].
struct SoftMask : Raster<double> {
    using Raster::Raster;
    bool operator==(const SoftMask&) const = default;
};

/// Bilinearly upsamples a rows x cols grid of {0,1} cells (row-major) to
/// (out_w + cell_w) x (out_h + cell_h), cell = ceil(out / grid), using
/// half-pixel centres with clamped borders, then crops out_w x out_h at
/// (shift_x, shift_y).
SoftMask upsample_cells(const std::vector<std::uint8_t>& cells, int rows, int cols, int out_w,
                        int out_h, int shift_x, int shift_y);

/// Random access to a sequence of masks. Masks are produced on demand so
/// that engines never hold more than a bounded window of them.
class MaskSource {
public:
    virtual ~MaskSource() = default;
    [[nodiscard]] virtual std::size_t size() const = 0;
    [[nodiscard]] virtual SoftMask mask(std::size_t index) const = 0;
};

/// Seeded random masks. Mask i draws from RandomStream(seed, i): first the
/// grid cells in row-major order as Bernoulli(p1), then the x and y shifts
/// uniform in [0, cell) when random_shift is on.
class RandomMasks : public MaskSource {
public:
    RandomMasks(RiseConfig cfg, int out_w, int out_h);

    [[nodiscard]] std::size_t size() const override { return cfg_.n_masks; }
    [[nodiscard]] SoftMask mask(std::size_t index) const override;

private:
    RiseConfig cfg_;
    int out_w_, out_h_;
};

class ExplicitMasks : public MaskSource {
public:
    explicit ExplicitMasks(std::vector<SoftMask> masks) : masks_(std::move(masks)) {}

    [[nodiscard]] std::size_t size() const override { return masks_.size(); }
    [[nodiscard]] SoftMask mask(std::size_t index) const override { return masks_.at(index); }

private:
    std::vector<SoftMask> masks_;
};

/// Sets the mask to exactly 1.0 wherever roi == 0.
SoftMask apply_roi_constraint(SoftMask mask, const BinaryMask& roi);

/// Pixelwise v * m rounded half up.
Image perturb(const Image& image, const SoftMask& mask);

struct RiseResult {
    SaliencyMap fidelity;
    SaliencyMap relevance;
    ExplainReport report;
};

/// Randomized-mask attribution with two maps:
///   fidelity  weights mask i by Dice(prediction_i, baseline);
///   relevance weights it by the mean score map inside the ROI (whole image
///             without ROI), or the predicted-foreground fraction there when
///             the predictor returns no score map.
/// Each raw map is S(x) = Σ s_i M_i(x) / Σ M_i(x) (0 where the denominator is
/// 0), normalized independently.
RiseResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const MaskSource& masks, std::uint64_t seed, const RunOptions& opts = {});

RiseResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const RiseConfig& cfg, const RunOptions& opts = {});

}  // namespace roiexplain::rise
