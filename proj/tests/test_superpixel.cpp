#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "roiexplain/superpixel.hpp"
#include "support.hpp"

using namespace roiexplain;
using namespace roiexplain::superpixel;

namespace {

Image two_halves(int size, std::uint8_t left, std::uint8_t right) {
    Image img(size, size, 1);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) img.at(x, y) = x < size / 2 ? left : right;
    return img;
}

/// Smooth blobs: sum of a few Gaussians plus mild noise.
Image blobs(int size, std::uint64_t seed) {
    RandomStream rng(seed, 0);
    FloatMap acc(size, size, 1, 0.0);
    for (int b = 0; b < 12; ++b) {
        const double cx = rng.uniform() * size, cy = rng.uniform() * size;
        const double r = 20 + rng.uniform() * 60, amp = 60 + rng.uniform() * 120;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                acc.at(x, y) += amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * r * r));
    }
    Image img(size, size, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<std::uint8_t>(std::clamp(acc.data[i] + rng.uniform() * 8, 0.0, 255.0));
    }
    return img;
}

}  // namespace

TEST_CASE("constant image is one segment") {
    const LabelMap labels = felzenszwalb(Image(20, 20, 1, std::uint8_t{128}), {});
    CHECK(labels.max_label() == 1);
    for (auto v : labels.data) CHECK(v == 1);
}

TEST_CASE("two halves give two segments matching the reference merge") {
    const Image img = two_halves(16, 20, 220);
    FelzConfig cfg{100.0, 0.0, 50};
    const LabelMap got = felzenszwalb(img, cfg);
    const LabelMap want = oracle::naive_felzenszwalb(img, 100.0, 50);
    CHECK(got.max_label() == 2);
    CHECK(got == want);

    cfg.sigma = 0.5;
    CHECK(felzenszwalb(img, cfg).max_label() == 2);
}

TEST_CASE("matches the reference merge on small random images") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image img = testing::random_image(12, 10, seed);
        for (double scale : {10.0, 100.0, 500.0}) {
            const LabelMap got = felzenszwalb(img, {scale, 0.0, 5});
            CHECK(got == oracle::naive_felzenszwalb(img, scale, 5));
        }
    }
}

TEST_CASE("segments respect min_size") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image img = testing::random_image(40, 30, seed);
        const LabelMap labels = felzenszwalb(img, {50.0, 0.5, 20});
        for (const auto& [label, size] : oracle::segment_sizes(labels)) CHECK(size >= 20);
    }
}

TEST_CASE("labels are contiguous in first-appearance order") {
    const LabelMap labels = felzenszwalb(testing::random_image(30, 30, 4), {20.0, 0.5, 5});
    int next = 1;
    for (auto v : labels.data) {
        CHECK(v >= 1);
        CHECK(v <= next);
        if (v == next) ++next;
    }
}

TEST_CASE("invalid configuration") {
    CHECK_THROWS_AS(felzenszwalb(Image(4, 4, 1), {0.0, 0.5, 5}), Error);
    CHECK_THROWS_AS(felzenszwalb(Image(4, 4, 1), {10.0, 0.5, 0}), Error);
    CHECK_THROWS_AS(felzenszwalb(Image(4, 4, 3), {}), Error);
}

TEST_CASE("restrict_to_roi") {
    const LabelMap labels = felzenszwalb(testing::random_image(24, 24, 8), {30.0, 0.5, 10});

    SUBCASE("full ROI keeps the partition") {
        const LabelMap r = restrict_to_roi(labels, BinaryMask(24, 24, 1, std::uint8_t{1}));
        // Same partition: a bijection between old and new labels.
        std::map<int, int> forward;
        for (std::size_t i = 0; i < labels.data.size(); ++i) {
            auto [it, fresh] = forward.try_emplace(labels.data[i], r.data[i]);
            CHECK(it->second == r.data[i]);
        }
        std::set<int> images;
        for (auto& [a, b] : forward) images.insert(b);
        CHECK(images.size() == forward.size());
        CHECK(r.max_label() == static_cast<int>(forward.size()));
    }

    SUBCASE("empty ROI zeroes everything") {
        const LabelMap r = restrict_to_roi(labels, BinaryMask(24, 24));
        for (auto v : r.data) CHECK(v == 0);
    }

    SUBCASE("label 0 is exactly the outside of the ROI") {
        const BinaryMask roi = testing::random_mask(24, 24, 3);
        const LabelMap r = restrict_to_roi(labels, roi);
        for (std::size_t i = 0; i < r.data.size(); ++i) CHECK((r.data[i] == 0) == (roi.data[i] == 0));
    }
}

TEST_CASE("restrict_to_roi splits a segment the ROI cuts in two") {
    const LabelMap labels(6, 1, 1, 1);
    BinaryMask roi(6, 1, 1, std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1});
    const LabelMap r = restrict_to_roi(labels, roi);
    CHECK(r.data == std::vector<std::int32_t>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("restrict_to_roi keeps a connected segment inside the ROI whole") {
    LabelMap labels(6, 6, 1, 1);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 4; ++x) labels.at(x, y) = 2;
    const LabelMap r = restrict_to_roi(labels, testing::rect_mask(6, 6, 0, 0, 5, 5));
    std::set<int> inner;
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 4; ++x) inner.insert(r.at(x, y));
    CHECK(inner.size() == 1);
}

TEST_CASE("organ-scale ROI on 512x512 retains on the order of 150 regions") {
    const Image img = blobs(512, 1);
    const LabelMap labels = felzenszwalb(img, {100.0, 0.5, 50});
    BinaryMask roi(512, 512);
    for (int y = 0; y < 512; ++y)
        for (int x = 0; x < 512; ++x) roi.at(x, y) = (x - 256) * (x - 256) + (y - 256) * (y - 256) < 150 * 150;
    const int k = restrict_to_roi(labels, roi).max_label();
    MESSAGE("retained regions: ", k, " of ", labels.max_label());
    CHECK(k >= 15);
    CHECK(k <= 1500);
}

TEST_CASE("gaussian with reflect borders preserves constants and mass") {
    FloatMap flat(9, 7, 1, 3.0);
    for (double v : gaussian_reflect(flat, 1.5).data) CHECK(v == doctest::Approx(3.0));
    FloatMap spike(15, 15, 1, 0.0);
    spike.at(7, 7) = 1.0;
    const FloatMap s = gaussian_reflect(spike, 1.0);
    double total = 0;
    for (double v : s.data) total += v;
    CHECK(total == doctest::Approx(1.0));
    CHECK(s.at(7, 7) > s.at(8, 7));
    CHECK(s.at(8, 7) == doctest::Approx(s.at(7, 8)));
    CHECK(gaussian_reflect(spike, 0.0) == spike);
}
