#include "roiexplain/engine.hpp"

#include <charconv>

#include "roiexplain/metrics.hpp"

namespace roiexplain {

Fill Fill::parse(const std::string& text) {
    if (text == "zero") return {Kind::Zero, 0};
    if (text == "mean" || text == "foreground_mean") return {Kind::ForegroundMean, 0};
    int v = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0 || v > 255) {
        fail(ErrorKind::InvalidInput, "fill must be 'zero', 'mean' or an integer 0..255, got '" + text + "'");
    }
    return {Kind::Constant, v};
}

std::string Fill::to_string() const {
    switch (kind) {
        case Kind::Zero: return "zero";
        case Kind::ForegroundMean: return "mean";
        case Kind::Constant: return std::to_string(value);
    }
    return "mean";
}

std::uint8_t foreground_mean(const Image& gray, int background_threshold) {
    std::uint64_t sum = 0, n = 0;
    for (auto v : gray.data) {
        if (v >= background_threshold) {
            sum += v;
            ++n;
        }
    }
    if (n == 0) return 0;
    return static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
}

std::uint8_t resolve_fill(const Fill& fill, const Image& gray, int background_threshold) {
    switch (fill.kind) {
        case Fill::Kind::Zero: return 0;
        case Fill::Kind::ForegroundMean: return foreground_mean(gray, background_threshold);
        case Fill::Kind::Constant: return static_cast<std::uint8_t>(fill.value);
    }
    return 0;
}

Fidelity region_fidelity(const Image& image, Predictor& predictor, const BinaryMask& baseline,
                         const BinaryMask& region, std::uint8_t fill) {
    Image masked = image;
    for (std::size_t i = 0; i < masked.data.size(); ++i) {
        if (region.data[i] == 0) masked.data[i] = fill;
    }
    const Prediction p = predictor.segment(masked);
    return {metrics::dice(p.mask, baseline), metrics::iou(p.mask, baseline)};
}

void check_engine_inputs(const Image& image, const Predictor& predictor,
                         const std::optional<BinaryMask>& roi) {
    validate(image);
    if (image.channels != 1) fail(ErrorKind::InvalidInput, "explain: grayscale input required");
    const auto& info = predictor.info();
    if ((info.input_width != 0 && info.input_width != image.width) ||
        (info.input_height != 0 && info.input_height != image.height)) {
        fail(ErrorKind::InvalidInput, "explain: image " + std::to_string(image.width) + "x" +
                                          std::to_string(image.height) + " does not match predictor input " +
                                          std::to_string(info.input_width) + "x" +
                                          std::to_string(info.input_height));
    }
    if (roi) {
        validate(*roi);
        require_same_shape(image, *roi, "explain: ROI");
    }
}

}  // namespace roiexplain
