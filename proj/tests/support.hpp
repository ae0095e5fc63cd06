#pragma once

// Helpers shared by the test binaries.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>

#include "roiexplain/predictor.hpp"
#include "roiexplain/random.hpp"
#include "roiexplain/raster.hpp"

namespace testing {

using namespace roiexplain;
namespace fs = std::filesystem;

inline Image random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
    RandomStream rng(seed, 0);
    Image img(w, h, 1);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(lo + rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    return img;
}

inline BinaryMask random_mask(int w, int h, std::uint64_t seed, double p = 0.5) {
    RandomStream rng(seed, 1);
    BinaryMask m(w, h);
    for (auto& v : m.data) v = rng.bernoulli(p) ? 1 : 0;
    return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
    BinaryMask m(w, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
    return m;
}

/// Predictor driven by a callable; optionally sleeps per call.
class FnPredictor : public Predictor {
public:
    FnPredictor(std::function<Prediction(const Image&)> fn, PredictorInfo info,
                std::chrono::milliseconds delay = std::chrono::milliseconds(0))
        : fn_(std::move(fn)), info_(std::move(info)), delay_(delay) {}

    [[nodiscard]] const PredictorInfo& info() const override { return info_; }

protected:
    Prediction run(const Image& image) override {
        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
        return fn_(image);
    }

private:
    std::function<Prediction(const Image&)> fn_;
    PredictorInfo info_;
    std::chrono::milliseconds delay_;
};

/// Same mask for any input.
inline FnPredictor constant_predictor(const BinaryMask& mask) {
    PredictorInfo info{"constant", 0, true, 0, mask.width, mask.height};
    return FnPredictor([mask](const Image&) { return Prediction{mask, std::nullopt}; }, info);
}

/// Fresh scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("roiexplain_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace testing
