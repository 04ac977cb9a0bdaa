#pragma once

#include <stdexcept>
#include <string>

namespace bite {

/// Precondition violated by the caller (shape mismatch, bad index, bad option).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state with (numerically) zero norm where a normalizable one is required.
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The two states spanning a boost plane are parallel, so there is no circle to walk.
class DegeneratePlane : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-positive overlap between the states spanning a boost plane.
class InvalidPlane : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense object would exceed the size caps of the reference solvers.
class TooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace bite
