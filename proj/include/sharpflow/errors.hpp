#pragma once

#include <stdexcept>
#include <string>

namespace sharpflow {

/// Base of every error raised by the library. The CLI maps these to a nonzero
/// exit code and records `kind()` in the JSON summary.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SHARPFLOW_ERROR(Name)                                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    }

SHARPFLOW_ERROR(PositivityViolation);
SHARPFLOW_ERROR(SolvabilityResidualTooLarge);
SHARPFLOW_ERROR(WindowTooSmall);
SHARPFLOW_ERROR(QuadratureDisagreement);
SHARPFLOW_ERROR(MedialAxisPoint);
SHARPFLOW_ERROR(FocalPoint);
SHARPFLOW_ERROR(NoCrossing);
SHARPFLOW_ERROR(MultipleCrossings);
SHARPFLOW_ERROR(StepSizeUnderflow);
SHARPFLOW_ERROR(StepRejected);
SHARPFLOW_ERROR(Blowup);
SHARPFLOW_ERROR(ConfigError);
SHARPFLOW_ERROR(RangeMismatch);

#undef SHARPFLOW_ERROR

} // namespace sharpflow
