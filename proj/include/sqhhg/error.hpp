#pragma once

#include <stdexcept>
#include <string>

namespace sqhhg {

enum class ErrorKind {
    invalid_parameter,
    insufficient_data,
    resolution,
    calibration,
    convergence,
    numerical_instability,
    grid_mismatch,
    undefined_ratio,
    unknown_unit,
    config,
    quality_gate,
};

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid parameter";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::calibration: return "calibration";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::numerical_instability: return "numerical instability";
    case ErrorKind::grid_mismatch: return "grid mismatch";
    case ErrorKind::undefined_ratio: return "undefined ratio";
    case ErrorKind::unknown_unit: return "unknown unit";
    case ErrorKind::config: return "config";
    case ErrorKind::quality_gate: return "quality gate";
    }
    return "error";
}

/// Every failure raised by the library carries a kind so front-ends can map
/// it to an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) fail(kind, what);
}

}  // namespace sqhhg
