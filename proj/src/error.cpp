#include "deeepc/error.hpp"

namespace deeepc {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidTrajectory: return "InvalidTrajectory";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::DepthExceedsLength: return "DepthExceedsLength";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotControllable: return "NotControllable";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MissingIni: return "MissingIni";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::CollapseDetected: return "CollapseDetected";
    case ErrorCode::StateDiverged: return "StateDiverged";
    case ErrorCode::PlantFault: return "PlantFault";
    case ErrorCode::QuadratureTooCoarse: return "QuadratureTooCoarse";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace deeepc
