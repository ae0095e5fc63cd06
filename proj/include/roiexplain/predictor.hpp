#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "roiexplain/raster.hpp"

namespace roiexplain {

struct Prediction {
    BinaryMask mask;
    std::optional<FloatMap> score_map;  // per-pixel foreground probability

    bool operator==(const Prediction&) const = default;
};

struct PredictorInfo {
    std::string name;
    std::uint64_t flops_per_call = 0;
    bool deterministic = true;
    unsigned max_concurrency = 0;  // 0 = unlimited
    int input_width = 0;           // 0 = any size
    int input_height = 0;
};

/// Black-box segmentation model. segment() checks the input size against the
/// declared one and counts calls; implementations provide run().
class Predictor {
public:
    virtual ~Predictor() = default;

    [[nodiscard]] virtual const PredictorInfo& info() const = 0;

    Prediction segment(const Image& image);

    [[nodiscard]] std::uint64_t calls() const { return calls_.load(); }
    void reset_calls() { calls_ = 0; }

protected:
    virtual Prediction run(const Image& image) = 0;

private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Predicts `support` iff at least `sensitivity` of the support pixels keep
/// their reference intensity; otherwise predicts an empty mask. Pixels outside
/// the support never influence the result.
class RegionOracle : public Predictor {
public:
    RegionOracle(Image reference, BinaryMask support, double sensitivity,
                 std::uint64_t flops_per_call = 0);

    [[nodiscard]] const PredictorInfo& info() const override { return info_; }

protected:
    Prediction run(const Image& image) override;

private:
    PredictorInfo info_;
    Image reference_;
    BinaryMask support_;
    std::size_t support_count_ = 0;
    double sensitivity_;
};

/// Scalar score s = clamp(bias + Σ_j w_j · mean_j, 0, 1), where mean_j is the
/// unit-normalized mean intensity of region j of `regions`. The prediction's
/// score map holds s on every labelled pixel (0 elsewhere), and the mask is
/// that map thresholded at 0.5.
class LinearOracle : public Predictor {
public:
    LinearOracle(LabelMap regions, std::map<int, double> weights, double bias = 0.0,
                 std::uint64_t flops_per_call = 0);

    [[nodiscard]] const PredictorInfo& info() const override { return info_; }

    /// Unclamped linear form, exposed for surrogate-recovery checks.
    [[nodiscard]] double linear_score(const Image& image) const;

protected:
    Prediction run(const Image& image) override;

private:
    PredictorInfo info_;
    LabelMap regions_;
    std::map<int, double> weights_;
    double bias_;
};

}  // namespace roiexplain
