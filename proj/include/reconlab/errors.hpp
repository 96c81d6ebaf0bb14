#pragma once

#include <stdexcept>
#include <string>

namespace reconlab {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data (bad magic, truncated payload, oversized dims).
class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// A required input artifact (dataset, checkpoint, k-space file) is missing.
class MissingArtifact : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace reconlab
