#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "blaq/errors.hpp"
#include "doctest.h"

namespace blaq::test {

// Runs f and returns the kind of blaq::Error it throws. Fails the test if it doesn't throw one.
inline ErrorKind error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a blaq::Error");
  return ErrorKind::Io;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

inline std::string fixture_dir() { return BLAQ_FIXTURE_DIR; }

}  // namespace blaq::test
