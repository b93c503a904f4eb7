#pragma once

#include <stdexcept>

namespace autoal {

// Error taxonomy shared by every module. Each subclass corresponds to one
// failure class promised by the public API.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside the documented domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// Matrix/parameter dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Object used out of sequence (stale tape, unlabeled access, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed file on ingestion (IDX, CSV, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite quantity.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace autoal
