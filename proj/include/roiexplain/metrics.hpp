#pragma once

#include <cstdint>
#include <vector>

#include "roiexplain/raster.hpp"

namespace roiexplain::metrics {

/// 2|a∩b| / (|a|+|b|). Two empty masks score 1.
double dice(const BinaryMask& a, const BinaryMask& b);

/// |a∩b| / |a∪b|. Two empty masks score 1.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Class probabilities and one-hot ground truth, stored class-major:
/// p[c * pixels + i] is the probability of class c at pixel i.
struct ProbabilityField {
    int classes = 0;
    int pixels = 0;
    std::vector<double> p;
    std::vector<double> g;
    double epsilon = 1e-6;

    [[nodiscard]] double prob(int c, int i) const { return p[static_cast<std::size_t>(c) * pixels + i]; }
    [[nodiscard]] double truth(int c, int i) const { return g[static_cast<std::size_t>(c) * pixels + i]; }

    void validate() const;
};

/// 1 - 2·ΣΣ p·g / (ΣΣ (p + g) + ε), with ε added once to the class-summed denominator.
double dice_loss(const ProbabilityField& f);

/// -ΣΣ g·log(p), with p clamped to at least 1e-12.
double ce_loss(const ProbabilityField& f);

/// dice_loss + ce_loss.
double total_loss(const ProbabilityField& f);

FlopsLedger ledger(std::uint64_t roi_flops, std::uint64_t calls, std::uint64_t flops_per_call);

}  // namespace roiexplain::metrics
