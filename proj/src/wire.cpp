#include "roiexplain/wire.hpp"

#include <bit>
#include <cstring>

#include <openssl/evp.h>

namespace roiexplain::wire {

using nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& what) {
    fail(ErrorKind::Predictor, "protocol error: " + what);
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) protocol_error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        protocol_error(std::string("field '") + key + "' has the wrong type");
    }
}

static_assert(std::endian::native == std::endian::little, "score maps are little-endian f32");

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    if (bytes.empty()) return out;
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) protocol_error("base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    if (text.empty()) return out;
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) protocol_error("invalid base64 payload");
    std::size_t padding = 0;
    if (text.back() == '=') ++padding;
    if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

json info_to_json(const PredictorInfo& info) {
    return {{"name", info.name},
            {"flops_per_call", info.flops_per_call},
            {"deterministic", info.deterministic},
            {"max_concurrency", info.max_concurrency},
            {"input_width", info.input_width},
            {"input_height", info.input_height},
            {"protocol_version", kProtocolVersion}};
}

PredictorInfo info_from_json(const json& j) {
    const int version = field<int>(j, "protocol_version");
    if (version != kProtocolVersion) {
        protocol_error("unsupported protocol version " + std::to_string(version));
    }
    PredictorInfo info;
    info.name = field<std::string>(j, "name");
    info.flops_per_call = field<std::uint64_t>(j, "flops_per_call");
    info.deterministic = field<bool>(j, "deterministic");
    info.max_concurrency = field<unsigned>(j, "max_concurrency");
    info.input_width = field<int>(j, "input_width");
    info.input_height = field<int>(j, "input_height");
    if (info.input_width < 0 || info.input_height < 0) protocol_error("negative input size");
    return info;
}

json request_to_json(const Image& image) {
    return {{"width", image.width},
            {"height", image.height},
            {"channels", image.channels},
            {"dtype", "u8"},
            {"pixels", base64_encode(image.data)}};
}

Image request_from_json(const json& j) {
    const int w = field<int>(j, "width"), h = field<int>(j, "height"), c = field<int>(j, "channels");
    if (field<std::string>(j, "dtype") != "u8") protocol_error("unsupported dtype");
    if (w < 1 || h < 1 || (c != 1 && c != 3)) protocol_error("invalid image shape");
    auto pixels = base64_decode(field<std::string>(j, "pixels"));
    if (pixels.size() != static_cast<std::size_t>(w) * h * c) protocol_error("pixel payload size mismatch");
    return Image(w, h, c, std::move(pixels));
}

json response_to_json(const Prediction& p) {
    json j{{"mask", base64_encode(p.mask.data)}, {"score_map", nullptr}};
    if (p.score_map) {
        std::vector<std::uint8_t> bytes(p.score_map->data.size() * sizeof(float));
        for (std::size_t i = 0; i < p.score_map->data.size(); ++i) {
            const auto v = static_cast<float>(p.score_map->data[i]);
            std::memcpy(bytes.data() + i * sizeof(float), &v, sizeof(float));
        }
        j["score_map"] = base64_encode(bytes);
    }
    return j;
}

Prediction response_from_json(const json& j, int width, int height) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    auto mask_bytes = base64_decode(field<std::string>(j, "mask"));
    if (mask_bytes.size() != n) protocol_error("mask size mismatch");
    for (auto v : mask_bytes) {
        if (v > 1) protocol_error("mask value outside {0,1}");
    }
    Prediction p{BinaryMask(width, height, 1, std::move(mask_bytes)), std::nullopt};

    if (!j.contains("score_map")) protocol_error("missing field 'score_map'");
    const json& s = j.at("score_map");
    if (!s.is_null()) {
        if (!s.is_string()) protocol_error("score_map must be a string or null");
        const auto bytes = base64_decode(s.get<std::string>());
        if (bytes.size() != n * sizeof(float)) protocol_error("score_map size mismatch");
        FloatMap score(width, height, 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            float v;
            std::memcpy(&v, bytes.data() + i * sizeof(float), sizeof(float));
            if (!(v >= 0.0f && v <= 1.0f)) protocol_error("score_map value outside [0,1]");
            score.data[i] = v;
        }
        p.score_map = std::move(score);
    }
    return p;
}

}  // namespace roiexplain::wire
