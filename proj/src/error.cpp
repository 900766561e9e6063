#include "covwalk/error.hpp"

namespace covwalk {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateImage: return "DegenerateImage";
        case ErrorCode::AreaMismatch: return "AreaMismatch";
        case ErrorCode::EllipticCenter: return "EllipticCenter";
        case ErrorCode::NonTermination: return "NonTermination";
        case ErrorCode::OverlappingHoroballs: return "OverlappingHoroballs";
        case ErrorCode::RelatorNotKilled: return "RelatorNotKilled";
        case ErrorCode::QuotientNotFreeRankD: return "QuotientNotFreeRankD";
        case ErrorCode::InvalidPresentation: return "InvalidPresentation";
        case ErrorCode::DegenerateSamples: return "DegenerateSamples";
        case ErrorCode::NonIntegrableConfiguration: return "NonIntegrableConfiguration";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

std::string Error::format(ErrorCode code, const std::string& what, int line) {
    std::string out(to_string(code));
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    out += ": ";
    out += what;
    return out;
}

}  // namespace covwalk
