#include "sras/error.hpp"

#include <sstream>

namespace sras {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::ZeroSummary: return "ZeroSummary";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidTaskValue: return "InvalidTaskValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeUndefined: return "ShapeUndefined";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularLinearization: return "SingularLinearization";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidRestriction: return "InvalidRestriction";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::InvalidProbeSet: return "InvalidProbeSet";
    case ErrorCode::DegenerateActivations: return "DegenerateActivations";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {
std::string no_convergence_message(double residual, int iterations) {
  std::ostringstream os;
  os << "fixed-point solver stopped after " << iterations << " iterations with residual "
     << residual;
  return os.str();
}
}  // namespace

NoConvergence::NoConvergence(double residual, int iterations)
    : Error(ErrorCode::NoConvergence, no_convergence_message(residual, iterations)),
      residual_(residual),
      iterations_(iterations) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace sras
