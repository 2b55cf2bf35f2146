#include "blaq/errors.hpp"

namespace blaq {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::State: return "state error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::UnsupportedOp: return "unsupported op";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace blaq
