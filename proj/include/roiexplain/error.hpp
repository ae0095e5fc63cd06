#pragma once

#include <stdexcept>
#include <string>

namespace roiexplain {

enum class ErrorKind {
    InvalidInput,  // bad dimensions, out-of-range values, unreadable files
    Degenerate,    // data that admits no meaningful result (constant maps, empty foreground)
    Predictor,     // model failure, transport or protocol errors
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace roiexplain
