#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roiexplain/raster.hpp"

namespace roiexplain::report {

/// Canonical JSON for a report: keys sorted, 2-space indent, floats with
/// exactly 6 decimals, trailing newline. Identical reports give identical bytes.
std::string write_report(const ExplainReport& r);
ExplainReport parse_report(const std::string& text);

/// Same canonical formatting for an arbitrary JSON value (used for compare output).
std::string write_canonical(const nlohmann::json& j);
nlohmann::json report_to_json(const ExplainReport& r);

/// 256-entry viridis colour table.
const std::array<std::array<std::uint8_t, 3>, 256>& viridis();

/// Maps a [0,1] map through the colour table (value rounded half up to 0..255).
Image colorize(const FloatMap& normalized);

/// RGB PNG bytes of colorize(normalized).
std::vector<std::uint8_t> write_heatmap(const FloatMap& normalized);

}  // namespace roiexplain::report
