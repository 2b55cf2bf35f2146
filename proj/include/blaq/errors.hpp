#pragma once

#include <stdexcept>
#include <string>

namespace blaq {

enum class ErrorKind {
  Shape,
  Numeric,
  State,
  Domain,
  UnsupportedOp,
  Config,
  Format,
  Io,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace blaq
