#pragma once

// Pieces shared by the occlusion, RISE and LIME engines.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "roiexplain/predictor.hpp"
#include "roiexplain/raster.hpp"

namespace roiexplain {

struct Fill {
    enum class Kind { Zero, ForegroundMean, Constant };
    Kind kind = Kind::ForegroundMean;
    int value = 0;  // Constant only, 0..255

    /// "zero", "mean" / "foreground_mean", or an integer 0..255.
    static Fill parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

/// Mean intensity (rounded half up) of the pixels at or above the background
/// threshold; 0 when there are none.
std::uint8_t foreground_mean(const Image& gray, int background_threshold = 20);

std::uint8_t resolve_fill(const Fill& fill, const Image& gray, int background_threshold = 20);

struct RunOptions {
    unsigned jobs = 0;             // 0 = hardware concurrency
    std::uint64_t roi_flops = 0;   // cost of ROI extraction, charged to the ledger
    int background_threshold = 20;
};

/// Dice/IoU between the baseline segmentation and the segmentation of the
/// image with every pixel outside `region` replaced by `fill`.
struct Fidelity {
    double dice = 1.0;
    double iou = 1.0;
};
Fidelity region_fidelity(const Image& image, Predictor& predictor, const BinaryMask& baseline,
                         const BinaryMask& region, std::uint8_t fill);

/// Raised when the predictor fails mid-run; carries the report accumulated so far.
class RunFailed : public Error {
public:
    RunFailed(const std::string& what, ExplainReport partial)
        : Error(ErrorKind::Predictor, what), partial_(std::move(partial)) {}

    [[nodiscard]] const ExplainReport& partial() const { return partial_; }

private:
    ExplainReport partial_;
};

/// Validates engine inputs: single-channel image matching the predictor, ROI
/// (when present) matching the image.
void check_engine_inputs(const Image& image, const Predictor& predictor,
                         const std::optional<BinaryMask>& roi);

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace roiexplain
