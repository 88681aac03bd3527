#include "elasto/error.hpp"

namespace elasto {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return "IoError";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteData: return "NonFiniteData";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DensityTooLow: return "DensityTooLow";
        case ErrorCode::ConstantFrame: return "ConstantFrame";
        case ErrorCode::EvenWindow: return "EvenWindow";
        case ErrorCode::WindowTooLarge: return "WindowTooLarge";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::Config: return "ConfigError";
    }
    return "UnknownError";
}

}  // namespace elasto
