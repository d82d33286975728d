#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deeepc {

enum class ErrorCode {
    MissingColumn,
    NonNumericCell,
    EmptyFile,
    InvalidTrajectory,
    InsufficientHistory,
    DepthExceedsLength,
    LengthMismatch,
    DimensionMismatch,
    NotControllable,
    NotPSD,
    Infeasible,
    MissingIni,
    NonFiniteLoss,
    CollapseDetected,
    StateDiverged,
    PlantFault,
    QuadratureTooCoarse,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorCode code);

/**
 * @brief Single exception type for the library; callers branch on code().
 */
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond) throw Error(code, what);
}

} // namespace deeepc
