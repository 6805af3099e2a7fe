#pragma once

#include <stdexcept>
#include <string>

namespace splatforge {

enum class ErrorKind {
  InvalidParameter,
  EmptyInput,
  InsufficientPoints,
  MissingAttribute,
  Parse,
  Io,
  Config,
  GuidanceFailure,
  MissingTarget,
  Service,
  Aborted,
  ContractViolation,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error surfaced by the command line.
int exit_code(ErrorKind kind);

}  // namespace splatforge
