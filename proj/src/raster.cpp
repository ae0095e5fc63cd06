#include "roiexplain/raster.hpp"

#include <algorithm>
#include <cmath>

namespace roiexplain {

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

int LabelMap::max_label() const {
    return data.empty() ? 0 : *std::max_element(data.begin(), data.end());
}

std::size_t PatchGrid::retained_count() const {
    return static_cast<std::size_t>(std::count(retained.begin(), retained.end(), std::uint8_t{1}));
}

double PatchGrid::rho() const {
    if (positions.empty()) return 0.0;
    return static_cast<double>(retained_count()) / static_cast<double>(positions.size());
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Occlusion: return "occlusion";
        case Method::Rise: return "rise";
        case Method::Lime: return "lime";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    if (name == "occlusion") return Method::Occlusion;
    if (name == "rise") return Method::Rise;
    if (name == "lime") return Method::Lime;
    fail(ErrorKind::InvalidInput, "unknown method '" + name + "'");
}

namespace {

template <typename T>
void validate_shape(const Raster<T>& r, bool allow_rgb, const char* what) {
    if (r.width < 1 || r.height < 1) {
        fail(ErrorKind::InvalidInput, std::string(what) + ": width and height must be >= 1");
    }
    if (r.channels != 1 && !(allow_rgb && r.channels == 3)) {
        fail(ErrorKind::InvalidInput,
             std::string(what) + ": unsupported channel count " + std::to_string(r.channels));
    }
    const std::size_t expected = r.pixel_count() * static_cast<std::size_t>(r.channels);
    if (r.data.size() != expected) {
        fail(ErrorKind::InvalidInput, std::string(what) + ": dimension mismatch, expected " +
                                          std::to_string(expected) + " values, got " +
                                          std::to_string(r.data.size()));
    }
}

}  // namespace

void validate(const Image& image) { validate_shape(image, true, "image"); }

void validate(const FloatImage& image) {
    validate_shape(image, true, "float image");
    for (float v : image.data) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            fail(ErrorKind::InvalidInput, "float image: out-of-range value " + std::to_string(v));
        }
    }
}

void validate(const BinaryMask& mask) {
    validate_shape(mask, false, "mask");
    for (auto v : mask.data) {
        if (v > 1) fail(ErrorKind::InvalidInput, "mask: value outside {0,1}");
    }
}

FloatImage to_float(const Image& image) {
    FloatImage out(image.width, image.height, image.channels);
    std::transform(image.data.begin(), image.data.end(), out.data.begin(),
                   [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
    return out;
}

Image to_u8(const FloatImage& image) {
    Image out(image.width, image.height, image.channels);
    std::transform(image.data.begin(), image.data.end(), out.data.begin(), [](float v) {
        const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
        return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
    });
    return out;
}

FloatMap min_max_normalize(const FloatMap& map) {
    FloatMap out(map.width, map.height, 1, 0.0);
    if (map.data.empty()) return out;
    const auto [lo, hi] = std::minmax_element(map.data.begin(), map.data.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    const double low = *lo;
    std::transform(map.data.begin(), map.data.end(), out.data.begin(),
                   [&](double v) { return std::clamp((v - low) / range, 0.0, 1.0); });
    return out;
}

}  // namespace roiexplain
