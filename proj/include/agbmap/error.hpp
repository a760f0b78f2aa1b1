#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agbmap {

enum class ErrorCode {
    CrsMismatch,
    GridMismatch,
    EmptySource,
    BadClassCode,
    EmptySeries,
    EmptyWindow,
    MissingModality,
    DegenerateChannel,
    TooFewUnits,
    InsufficientData,
    SingularDesign,
    EmptyMask,
    ShapeMismatch,
    NoSupervisedPixels,
    ModalityMismatch,
    StatsMismatch,
    NoSupervision,
    DivergedLoss,
    EmptySplit,
    InsufficientOverlap,
    InvalidArgument,
    Io,
    Format,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace agbmap
