#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sras {

enum class ErrorCode {
  InvalidMatrix,
  NotPositiveDefinite,
  NotPSD,
  ZeroSummary,
  DimMismatch,
  InvalidTaskValue,
  InvalidArgument,
  ShapeUndefined,
  NoConvergence,
  SingularLinearization,
  EmptyDataset,
  InvalidRestriction,
  RankDeficient,
  InvalidRank,
  FamilyMismatch,
  InvalidProbeSet,
  DegenerateActivations,
  InsufficientData,
  GridTooSmall,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code lets
/// front-ends map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the fixed-point solver; carries the last residual reached.
class NoConvergence : public Error {
 public:
  NoConvergence(double residual, int iterations);

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace sras
