#include "splatforge/error.hpp"

namespace splatforge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::InsufficientPoints: return "insufficient points";
    case ErrorKind::MissingAttribute: return "missing attribute";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::GuidanceFailure: return "guidance failure";
    case ErrorKind::MissingTarget: return "missing target";
    case ErrorKind::Service: return "service error";
    case ErrorKind::Aborted: return "aborted";
    case ErrorKind::ContractViolation: return "contract violation";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidParameter:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::EmptyInput:
    case ErrorKind::InsufficientPoints:
    case ErrorKind::MissingAttribute:
      return 3;
    case ErrorKind::Service:
    case ErrorKind::GuidanceFailure:
    case ErrorKind::MissingTarget:
      return 4;
    case ErrorKind::Aborted:
    case ErrorKind::ContractViolation:
      return 5;
  }
  return 1;
}

}  // namespace splatforge
