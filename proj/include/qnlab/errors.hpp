#pragma once

#include <stdexcept>
#include <string>

namespace qnlab {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used in harness error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define QNLAB_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

QNLAB_DEFINE_ERROR(InvalidArgument);
QNLAB_DEFINE_ERROR(GridMismatch);
QNLAB_DEFINE_ERROR(NonZeroMean);
QNLAB_DEFINE_ERROR(NotAProbabilityDensity);
QNLAB_DEFINE_ERROR(NewtonDiverged);
QNLAB_DEFINE_ERROR(PotentialSolveFailed);
QNLAB_DEFINE_ERROR(StepTooLarge);
QNLAB_DEFINE_ERROR(BlowupGuardTripped);
QNLAB_DEFINE_ERROR(NonpositiveReference);
QNLAB_DEFINE_ERROR(NotPositive);
QNLAB_DEFINE_ERROR(ConfigError);
QNLAB_DEFINE_ERROR(IoError);

#undef QNLAB_DEFINE_ERROR

}  // namespace qnlab
