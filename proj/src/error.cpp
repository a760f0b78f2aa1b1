#include "agbmap/error.hpp"

namespace agbmap {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::CrsMismatch: return "CrsMismatch";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::EmptySource: return "EmptySource";
        case ErrorCode::BadClassCode: return "BadClassCode";
        case ErrorCode::EmptySeries: return "EmptySeries";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::MissingModality: return "MissingModality";
        case ErrorCode::DegenerateChannel: return "DegenerateChannel";
        case ErrorCode::TooFewUnits: return "TooFewUnits";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NoSupervisedPixels: return "NoSupervisedPixels";
        case ErrorCode::ModalityMismatch: return "ModalityMismatch";
        case ErrorCode::StatsMismatch: return "StatsMismatch";
        case ErrorCode::NoSupervision: return "NoSupervision";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

}  // namespace agbmap
