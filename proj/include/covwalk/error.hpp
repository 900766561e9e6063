#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covwalk {

enum class ErrorCode {
    InvalidArgument,
    DegenerateImage,
    AreaMismatch,
    EllipticCenter,
    NonTermination,
    OverlappingHoroballs,
    RelatorNotKilled,
    QuotientNotFreeRankD,
    InvalidPresentation,
    DegenerateSamples,
    NonIntegrableConfiguration,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers which
/// contract was violated. `line()` is non-zero for parse errors that can be
/// anchored to an input line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, int line = 0)
        : std::runtime_error(format(code, what, line)), code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(ErrorCode code, const std::string& what, int line);

    ErrorCode code_;
    int line_;
};

}  // namespace covwalk
