#include "condcap/error.hpp"

namespace condcap {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::NonMonotoneX: return "NON_MONOTONE_X";
    case ErrorCode::BadArity: return "BAD_ARITY";
    case ErrorCode::NonpositiveLength: return "NONPOSITIVE_LENGTH";
    case ErrorCode::DecodeAmbiguous: return "DECODE_AMBIGUOUS";
    case ErrorCode::SelfIntersection: return "SELF_INTERSECTION";
    case ErrorCode::NotSimplyConnected: return "NOT_SIMPLY_CONNECTED";
    case ErrorCode::NotSymmetric: return "NOT_SYMMETRIC";
    case ErrorCode::Nonconvergent: return "NONCONVERGENT";
    case ErrorCode::PoleAtLatticePoint: return "POLE_AT_LATTICE_POINT";
    case ErrorCode::Domain: return "DOMAIN";
    case ErrorCode::ParamDomain: return "PARAM_DOMAIN";
    case ErrorCode::QuadratureStall: return "QUADRATURE_STALL";
    case ErrorCode::NonintegrableEndpoint: return "NONINTEGRABLE_ENDPOINT";
    case ErrorCode::NodeInsideInterval: return "NODE_INSIDE_INTERVAL";
    case ErrorCode::PoleAtP: return "POLE_AT_P";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::LeftDomain: return "LEFT_DOMAIN";
    case ErrorCode::Crowding: return "CROWDING";
    case ErrorCode::WrongArcCount: return "WRONG_ARC_COUNT";
    case ErrorCode::Degenerate: return "DEGENERATE";
    case ErrorCode::OrientationFlip: return "ORIENTATION_FLIP";
    case ErrorCode::SingularOverlap: return "SINGULAR_OVERLAP";
    case ErrorCode::IterationLimit: return "ITERATION_LIMIT";
    case ErrorCode::CheckFail: return "CHECK_FAIL";
    case ErrorCode::NotConverged: return "NOT_CONVERGED";
    case ErrorCode::OomGuard: return "OOM_GUARD";
    case ErrorCode::MethodScope: return "METHOD_SCOPE";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace condcap
