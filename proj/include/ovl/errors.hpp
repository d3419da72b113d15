#pragma once

#include <stdexcept>
#include <string>

namespace ovl {

// Bad input: out-of-domain parameters, malformed configuration. CLI exit 2.
class validation_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Valid input, but the evaluation itself broke down (pole hit, singular
// minor, eigensolver failure). CLI exit 3.
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace ovl
