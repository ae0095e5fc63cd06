#pragma once

#include <chrono>
#include <string>

#include "roiexplain/predictor.hpp"

namespace roiexplain {

/// Predictor backed by a model server speaking the wire protocol in wire.hpp.
/// The constructor performs the /info handshake.
class HttpPredictor : public Predictor {
public:
    explicit HttpPredictor(std::string endpoint,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30));

    [[nodiscard]] const PredictorInfo& info() const override { return info_; }
    [[nodiscard]] const std::string& endpoint() const { return endpoint_; }

protected:
    Prediction run(const Image& image) override;

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
    PredictorInfo info_;
};

}  // namespace roiexplain
