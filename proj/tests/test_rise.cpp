#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "roiexplain/rise.hpp"
#include "support.hpp"

using namespace roiexplain;
using namespace roiexplain::rise;

namespace {

/// 4x4 image scored by a linear model over its four 2x2 quadrants.
struct Toy {
    Image image{4, 4, 1, std::vector<std::uint8_t>{200, 180, 90, 60, 220, 250, 70, 40,
                                                   30, 60, 160, 170, 20, 10, 150, 140}};
    LabelMap quadrants{4, 4, 1, std::vector<std::int32_t>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}};
    std::map<int, double> weights{{1, 0.5}, {2, 0.1}, {3, 0.3}, {4, 0.25}};

    [[nodiscard]] LinearOracle predictor() const { return LinearOracle(quadrants, weights, 0.0); }
};

struct Exhaustive {
    std::vector<std::vector<double>> masks;
    std::vector<double> fidelity_scores, relevance_scores;
};

Exhaustive enumerate(const Toy& toy) {
    LinearOracle p = toy.predictor();
    const BinaryMask base = p.segment(toy.image).mask;
    Exhaustive e;
    for (const auto& cells : oracle::all_patterns(2, 2)) {
        const auto m = oracle::soft_mask(cells, 2, 2, 4, 4);
        const Prediction pred = p.segment(oracle::masked_image(toy.image, m));
        double mean_score = 0;
        for (double v : pred.score_map->data) mean_score += v;
        e.masks.push_back(m);
        e.fidelity_scores.push_back(oracle::mask_dice(pred.mask, base));
        e.relevance_scores.push_back(mean_score / 16.0);
    }
    return e;
}

std::vector<std::uint8_t> to_cells(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("upsampling matches the pixelwise bilinear oracle") {
    for (const auto& cells : oracle::all_patterns(2, 2)) {
        const SoftMask m = upsample_cells(to_cells(cells), 2, 2, 4, 4, 0, 0);
        const auto want = oracle::soft_mask(cells, 2, 2, 4, 4);
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(m.data[i] - want[i]) <= 1e-12);
    }
    for (const auto& cells : oracle::all_patterns(3, 2)) {
        const SoftMask m = upsample_cells(to_cells(cells), 3, 2, 10, 9, 0, 0);
        const auto want = oracle::soft_mask(cells, 3, 2, 10, 9);
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(m.data[i] - want[i]) <= 1e-12);
    }
}

TEST_CASE("shift crops the oversized upsample") {
    std::vector<std::uint8_t> cells{1, 0, 0, 0};
    const SoftMask base = upsample_cells(cells, 2, 2, 4, 4, 0, 0);
    const SoftMask shifted = upsample_cells(cells, 2, 2, 4, 4, 1, 1);
    CHECK(shifted.at(0, 0) == base.at(1, 1));
    CHECK(shifted.at(1, 2) == base.at(2, 3));
}

TEST_CASE("p1 of 1 and 0 give constant masks") {
    RiseConfig cfg;
    cfg.n_masks = 20;
    cfg.p1 = 1.0;
    const RandomMasks ones(cfg, 30, 20);
    cfg.p1 = 0.0;
    const RandomMasks zeros(cfg, 30, 20);
    for (std::size_t i = 0; i < 20; ++i) {
        for (double v : ones.mask(i).data) CHECK(v == 1.0);
        for (double v : zeros.mask(i).data) CHECK(v == 0.0);
    }
}

TEST_CASE("mask values average to p1") {
    for (double p1 : {0.2, 0.5, 0.8}) {
        RiseConfig cfg;
        cfg.p1 = p1;
        cfg.seed = 99;
        const RandomMasks masks(cfg, 32, 32);
        std::vector<double> mean(32 * 32, 0.0);
        for (std::size_t i = 0; i < cfg.n_masks; ++i) {
            const SoftMask m = masks.mask(i);
            for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += m.data[p] / cfg.n_masks;
        }
        for (double v : mean) CHECK(std::abs(v - p1) <= 0.05);
    }
}

TEST_CASE("masks are reproducible by index") {
    RiseConfig cfg;
    cfg.seed = 5;
    const RandomMasks a(cfg, 24, 24), b(cfg, 24, 24);
    CHECK(a.mask(17) == b.mask(17));
    CHECK_FALSE(a.mask(17) == a.mask(18));
    cfg.seed = 6;
    CHECK_FALSE(RandomMasks(cfg, 24, 24).mask(17) == a.mask(17));
}

TEST_CASE("ROI constraint") {
    SoftMask m(4, 4, 1, 0.3);
    CHECK(apply_roi_constraint(m, BinaryMask(4, 4, 1, std::uint8_t{1})) == m);
    for (double v : apply_roi_constraint(m, BinaryMask(4, 4)).data) CHECK(v == 1.0);

    const BinaryMask roi = testing::random_mask(16, 16, 3);
    RiseConfig cfg;
    cfg.seed = 1;
    const RandomMasks masks(cfg, 16, 16);
    const Image img = testing::random_image(16, 16, 4);
    for (std::size_t i = 0; i < 50; ++i) {
        const SoftMask raw = masks.mask(i);
        const SoftMask c = apply_roi_constraint(raw, roi);
        const Image out = perturb(img, c);
        for (std::size_t p = 0; p < roi.data.size(); ++p) {
            if (roi.data[p]) {
                CHECK(c.data[p] == raw.data[p]);
            } else {
                CHECK(c.data[p] == 1.0);
                CHECK(out.data[p] == img.data[p]);
            }
        }
    }
}

TEST_CASE("perturb rounds half up") {
    Image img(3, 1, 1, std::vector<std::uint8_t>{255, 3, 100});
    SoftMask m(3, 1, 1, std::vector<double>{0.5, 0.5, 0.0});
    CHECK(perturb(img, m).data == std::vector<std::uint8_t>{128, 2, 0});
}

TEST_CASE("exhaustive 2x2 aggregation equals the hand oracle") {
    const Toy toy;
    const Exhaustive e = enumerate(toy);
    std::vector<SoftMask> masks;
    for (const auto& cells : oracle::all_patterns(2, 2)) masks.push_back(upsample_cells(to_cells(cells), 2, 2, 4, 4, 0, 0));
    LinearOracle p = toy.predictor();
    const RiseResult r = run(toy.image, p, std::nullopt, ExplicitMasks(masks), 0, {});
    const auto fid = oracle::weighted_average(e.masks, e.fidelity_scores);
    const auto rel = oracle::weighted_average(e.masks, e.relevance_scores);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(std::abs(r.fidelity.raw.data[i] - fid[i]) <= 1e-9);
        CHECK(std::abs(r.relevance.raw.data[i] - rel[i]) <= 1e-9);
    }
    CHECK(r.report.n_patch == 16);
    CHECK(r.report.flops.calls == 17);
    CHECK(r.report.rho == 1.0);
}

TEST_CASE("Monte Carlo estimate converges to the exhaustive expectation") {
    const Toy toy;
    const Exhaustive e = enumerate(toy);
    const auto fid = oracle::weighted_average(e.masks, e.fidelity_scores);
    LinearOracle p = toy.predictor();
    RiseConfig cfg{10000, 0.5, 2, 2, false, 2024};
    const RiseResult r = run(toy.image, p, std::nullopt, cfg, {});
    for (std::size_t px = 0; px < 16; ++px) {
        // Delta-method variance of the ratio estimator under uniform patterns.
        double mean_m = 0, second = 0;
        for (std::size_t i = 0; i < e.masks.size(); ++i) {
            mean_m += e.masks[i][px] / 16.0;
            const double dev = e.masks[i][px] * (e.fidelity_scores[i] - fid[px]);
            second += dev * dev / 16.0;
        }
        const double sigma = std::sqrt(second / cfg.n_masks) / mean_m;
        CHECK(std::abs(r.fidelity.raw.data[px] - fid[px]) <= 3 * sigma + 1e-12);
    }
}

TEST_CASE("constant predictor gives an all-zero fidelity map") {
    const Image img = testing::random_image(16, 16, 8);
    auto p = testing::constant_predictor(testing::rect_mask(16, 16, 2, 2, 9, 9));
    RiseConfig cfg;
    cfg.n_masks = 50;
    const RiseResult r = run(img, p, std::nullopt, cfg, {});
    for (double v : r.fidelity.normalized.data) CHECK(v == 0.0);
}

TEST_CASE("relevance falls back to the mask fraction inside the ROI") {
    const Image img = testing::random_image(8, 8, 9);
    const BinaryMask roi = testing::rect_mask(8, 8, 0, 0, 4, 8);
    auto p = testing::constant_predictor(testing::rect_mask(8, 8, 0, 0, 2, 8));
    const std::vector<SoftMask> masks{SoftMask(8, 8, 1, 1.0)};
    const RiseResult r = run(img, p, roi, ExplicitMasks(masks), 0, {});
    CHECK(r.relevance.raw.at(0, 0) == 0.5);  // 16 of 32 ROI pixels predicted
    CHECK(r.report.gated);
}

TEST_CASE("runs are bit-reproducible and independent of workers") {
    const Toy toy;
    LinearOracle p = toy.predictor();
    RiseConfig cfg{300, 0.5, 2, 2, true, 77};
    const RiseResult a = run(toy.image, p, std::nullopt, cfg, {1});
    const RiseResult b = run(toy.image, p, std::nullopt, cfg, {8});
    CHECK(a.fidelity.raw == b.fidelity.raw);
    CHECK(a.relevance.raw == b.relevance.raw);
    CHECK(a.report.seed == 77);
}

TEST_CASE("configuration validation") {
    const Toy toy;
    LinearOracle p = toy.predictor();
    RiseConfig cfg;
    cfg.p1 = 1.0;
    CHECK_THROWS_AS(run(toy.image, p, std::nullopt, cfg, {}), Error);
    cfg = {};
    cfg.n_masks = 0;
    CHECK_THROWS_AS(run(toy.image, p, std::nullopt, cfg, {}), Error);
    CHECK_THROWS_AS(upsample_cells({1, 0}, 2, 2, 4, 4, 0, 0), Error);
}
