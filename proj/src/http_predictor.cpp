#include "roiexplain/http_predictor.hpp"

#include <httplib.h>

#include "roiexplain/wire.hpp"

namespace roiexplain {

namespace {

httplib::Client make_client(const std::string& endpoint, std::chrono::milliseconds timeout) {
    httplib::Client client(endpoint);
    if (!client.is_valid()) fail(ErrorKind::Predictor, "invalid predictor endpoint '" + endpoint + "'");
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    return client;
}

nlohmann::json parse_body(const std::string& body) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Predictor, std::string("protocol error: malformed JSON body: ") + e.what());
    }
}

void check(const httplib::Result& res, const std::string& what) {
    if (!res) {
        fail(ErrorKind::Predictor, what + ": transport error (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        fail(ErrorKind::Predictor, what + ": HTTP status " + std::to_string(res->status));
    }
}

}  // namespace

HttpPredictor::HttpPredictor(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
    auto client = make_client(endpoint_, timeout_);
    const auto res = client.Get("/info");
    check(res, "GET /info");
    info_ = wire::info_from_json(parse_body(res->body));
}

Prediction HttpPredictor::run(const Image& image) {
    // One connection per call keeps concurrent segment() calls independent.
    auto client = make_client(endpoint_, timeout_);
    const auto res = client.Post("/segment", wire::request_to_json(image).dump(), "application/json");
    check(res, "POST /segment");
    return wire::response_from_json(parse_body(res->body), image.width, image.height);
}

}  // namespace roiexplain
