#pragma once

#include <stdexcept>
#include <string>

namespace tucker {

/// Shapes or sizes that do not fit together (mode out of range, mismatched dims).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments that violate a precondition other than shape.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input that is well-formed but outside what an exact routine supports.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File reading/writing and format errors.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tucker
