#pragma once

#include <stdexcept>
#include <string>

namespace lostsales {

// Error taxonomy. Validation errors mean the inputs were malformed;
// guard errors mean a numerical budget or structural assumption was hit
// at runtime. The CLI maps them to distinct exit codes.
enum class ErrorCode {
  // validation
  BadSpan,
  NegativeMass,
  ZeroVariance,
  BadParam,
  GridMismatch,
  RTooLarge,
  NotLattice,
  OffGrid,
  BadConfig,
  // numerical / structural guards
  DepthExceeded,
  WalkCap,
  DegenerateLadder,
  AtomOne,
  CapExceeded,
  BeyondTable,
  StateBudgetExceeded,
  NoConvergence,
  Multichain,
  BracketMiss,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadSpan: return "BadSpan";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::BadParam: return "BadParam";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::RTooLarge: return "RTooLarge";
    case ErrorCode::NotLattice: return "NotLattice";
    case ErrorCode::OffGrid: return "OffGrid";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::WalkCap: return "WalkCap";
    case ErrorCode::DegenerateLadder: return "DegenerateLadder";
    case ErrorCode::AtomOne: return "AtomOne";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::BeyondTable: return "BeyondTable";
    case ErrorCode::StateBudgetExceeded: return "StateBudgetExceeded";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Multichain: return "Multichain";
    case ErrorCode::BracketMiss: return "BracketMiss";
  }
  return "Unknown";
}

inline bool is_validation_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadSpan:
    case ErrorCode::NegativeMass:
    case ErrorCode::ZeroVariance:
    case ErrorCode::BadParam:
    case ErrorCode::GridMismatch:
    case ErrorCode::RTooLarge:
    case ErrorCode::NotLattice:
    case ErrorCode::OffGrid:
    case ErrorCode::BadConfig:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace lostsales
