#pragma once

#include <stdexcept>
#include <string>

namespace ogrit {

struct OgritError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : OgritError {
  using OgritError::OgritError;
};

struct ValidationError : OgritError {
  using OgritError::OgritError;
};

/// Geometry precondition failures in occlusion computation.
struct GeometryError : OgritError {
  using OgritError::OgritError;
};

struct OffMapError : OgritError {
  using OgritError::OgritError;
};

struct UnreachableGoalError : OgritError {
  using OgritError::OgritError;
};

/// Raised when a documented invariant is broken by a caller or a corrupted model.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace ogrit
