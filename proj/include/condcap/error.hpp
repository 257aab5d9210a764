#pragma once

#include <stdexcept>
#include <string>

namespace condcap {

enum class ErrorCode {
  ParseError,
  NonMonotoneX,
  BadArity,
  NonpositiveLength,
  DecodeAmbiguous,
  SelfIntersection,
  NotSimplyConnected,
  NotSymmetric,
  Nonconvergent,
  PoleAtLatticePoint,
  Domain,
  ParamDomain,
  QuadratureStall,
  NonintegrableEndpoint,
  NodeInsideInterval,
  PoleAtP,
  NoConvergence,
  LeftDomain,
  Crowding,
  WrongArcCount,
  Degenerate,
  OrientationFlip,
  SingularOverlap,
  IterationLimit,
  CheckFail,
  NotConverged,
  OomGuard,
  MethodScope,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace condcap
