#include "roiexplain/predictor.hpp"

#include <algorithm>

namespace roiexplain {

Prediction Predictor::segment(const Image& image) {
    validate(image);
    const auto& inf = info();
    if ((inf.input_width != 0 && image.width != inf.input_width) ||
        (inf.input_height != 0 && image.height != inf.input_height)) {
        fail(ErrorKind::InvalidInput, "predictor '" + inf.name + "' expects " +
                                          std::to_string(inf.input_width) + "x" +
                                          std::to_string(inf.input_height) + " input, got " +
                                          std::to_string(image.width) + "x" +
                                          std::to_string(image.height));
    }
    ++calls_;
    Prediction p = run(image);
    if (!p.mask.same_shape(image)) fail(ErrorKind::Predictor, "predictor returned a mask of the wrong size");
    if (p.score_map && !p.score_map->same_shape(image)) {
        fail(ErrorKind::Predictor, "predictor returned a score map of the wrong size");
    }
    return p;
}

RegionOracle::RegionOracle(Image reference, BinaryMask support, double sensitivity,
                           std::uint64_t flops_per_call)
    : reference_(std::move(reference)), support_(std::move(support)), sensitivity_(sensitivity) {
    validate(reference_);
    validate(support_);
    if (reference_.channels != 1) fail(ErrorKind::InvalidInput, "region oracle: grayscale reference required");
    require_same_shape(reference_, support_, "region oracle");
    if (!(sensitivity_ >= 0.0 && sensitivity_ <= 1.0)) {
        fail(ErrorKind::InvalidInput, "region oracle: sensitivity must be within [0,1]");
    }
    support_count_ = support_.count();
    info_ = {"region-oracle", flops_per_call, true, 0, reference_.width, reference_.height};
}

Prediction RegionOracle::run(const Image& image) {
    if (image.channels != 1) fail(ErrorKind::InvalidInput, "region oracle: grayscale input required");
    if (support_count_ == 0) return {BinaryMask(image.width, image.height), std::nullopt};
    std::size_t kept = 0;
    for (std::size_t i = 0; i < support_.data.size(); ++i) {
        kept += support_.data[i] != 0 && image.data[i] == reference_.data[i];
    }
    const double fraction = static_cast<double>(kept) / static_cast<double>(support_count_);
    if (fraction >= sensitivity_) return {support_, std::nullopt};
    return {BinaryMask(image.width, image.height), std::nullopt};
}

LinearOracle::LinearOracle(LabelMap regions, std::map<int, double> weights, double bias,
                           std::uint64_t flops_per_call)
    : regions_(std::move(regions)), weights_(std::move(weights)), bias_(bias) {
    if (regions_.width < 1 || regions_.height < 1 || regions_.data.size() != regions_.pixel_count()) {
        fail(ErrorKind::InvalidInput, "linear oracle: malformed region map");
    }
    info_ = {"linear-oracle", flops_per_call, true, 0, regions_.width, regions_.height};
}

double LinearOracle::linear_score(const Image& image) const {
    require_same_shape(image, regions_, "linear oracle");
    std::map<int, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < regions_.data.size(); ++i) {
        auto& [sum, n] = sums[regions_.data[i]];
        sum += image.data[i * static_cast<std::size_t>(image.channels)] / 255.0;
        ++n;
    }
    double score = bias_;
    for (const auto& [label, w] : weights_) {
        const auto it = sums.find(label);
        if (it != sums.end()) score += w * it->second.first / static_cast<double>(it->second.second);
    }
    return score;
}

Prediction LinearOracle::run(const Image& image) {
    const double s = std::clamp(linear_score(image), 0.0, 1.0);
    FloatMap score(image.width, image.height, 1, 0.0);
    BinaryMask mask(image.width, image.height);
    for (std::size_t i = 0; i < regions_.data.size(); ++i) {
        if (regions_.data[i] > 0) {
            score.data[i] = s;
            mask.data[i] = s >= 0.5 ? 1 : 0;
        }
    }
    return {std::move(mask), std::move(score)};
}

}  // namespace roiexplain
