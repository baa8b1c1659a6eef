#include "gaitbreath/error.hpp"

namespace gaitbreath {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::Parameter: return 4;
    case ErrorKind::Numerical: return 5;
    case ErrorKind::Protocol: return 6;
  }
  return 1;
}

const char* kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Protocol: return "protocol";
  }
  return "unknown";
}

}  // namespace gaitbreath
