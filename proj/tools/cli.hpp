#pragma once

#include <string>
#include <vector>

namespace roiexplain::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kDegenerate = 3;
inline constexpr int kPredictorError = 4;
inline constexpr int kInternalError = 5;

/// Runs the command line; args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace roiexplain::cli
