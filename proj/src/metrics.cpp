#include "roiexplain/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace roiexplain::metrics {

namespace {

struct Overlap {
    std::size_t a = 0, b = 0, both = 0;
};

Overlap overlap(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask overlap");
    Overlap o;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool in_a = a.data[i] != 0, in_b = b.data[i] != 0;
        o.a += in_a;
        o.b += in_b;
        o.both += in_a && in_b;
    }
    return o;
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
    const Overlap o = overlap(a, b);
    if (o.a + o.b == 0) return 1.0;
    return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.a + o.b);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    const Overlap o = overlap(a, b);
    const std::size_t uni = o.a + o.b - o.both;
    if (uni == 0) return 1.0;
    return static_cast<double>(o.both) / static_cast<double>(uni);
}

void ProbabilityField::validate() const {
    if (classes < 1 || pixels < 1) fail(ErrorKind::InvalidInput, "probability field: empty");
    const auto n = static_cast<std::size_t>(classes) * pixels;
    if (p.size() != n || g.size() != n) {
        fail(ErrorKind::InvalidInput, "probability field: dimension mismatch");
    }
    for (int i = 0; i < pixels; ++i) {
        double ps = 0.0, gs = 0.0;
        for (int c = 0; c < classes; ++c) {
            ps += prob(c, i);
            const double t = truth(c, i);
            if (t != 0.0 && t != 1.0) fail(ErrorKind::InvalidInput, "probability field: g not binary");
            gs += t;
        }
        if (std::abs(ps - 1.0) > 1e-6) {
            fail(ErrorKind::InvalidInput, "probability field: probabilities do not sum to 1");
        }
        if (gs != 1.0) fail(ErrorKind::InvalidInput, "probability field: g not one-hot");
    }
}

double dice_loss(const ProbabilityField& f) {
    f.validate();
    double inter = 0.0, denom = 0.0;
    for (std::size_t k = 0; k < f.p.size(); ++k) {
        inter += f.p[k] * f.g[k];
        denom += f.p[k] + f.g[k];
    }
    return 1.0 - 2.0 * inter / (denom + f.epsilon);
}

double ce_loss(const ProbabilityField& f) {
    f.validate();
    double loss = 0.0;
    for (std::size_t k = 0; k < f.p.size(); ++k) {
        if (f.g[k] != 0.0) loss -= f.g[k] * std::log(std::max(f.p[k], 1e-12));
    }
    return loss;
}

double total_loss(const ProbabilityField& f) { return dice_loss(f) + ce_loss(f); }

FlopsLedger ledger(std::uint64_t roi_flops, std::uint64_t calls, std::uint64_t flops_per_call) {
    return {roi_flops, calls, flops_per_call, roi_flops + calls * flops_per_call};
}

}  // namespace roiexplain::metrics
