#pragma once

// JSON wire format shared with out-of-process model servers.
//
//   GET  /info     -> {"name","flops_per_call","deterministic","max_concurrency",
//                      "input_width","input_height","protocol_version":1}
//   POST /segment  <- {"width","height","channels","dtype":"u8","pixels":base64}
//                  -> {"mask":base64 u8 {0,1}, "score_map":base64 f32 LE | null}
//
// Every parse failure raises Error(ErrorKind::Predictor).

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roiexplain/predictor.hpp"

namespace roiexplain::wire {

inline constexpr int kProtocolVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

nlohmann::json info_to_json(const PredictorInfo& info);
PredictorInfo info_from_json(const nlohmann::json& j);

nlohmann::json request_to_json(const Image& image);
Image request_from_json(const nlohmann::json& j);

nlohmann::json response_to_json(const Prediction& p);
Prediction response_from_json(const nlohmann::json& j, int width, int height);

}  // namespace roiexplain::wire
