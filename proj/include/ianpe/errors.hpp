#pragma once

#include <stdexcept>
#include <string>

namespace ianpe {

// Base for all library errors. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class BreakdownDetected : public Error {
 public:
  using Error::Error;
};

class InvalidTolerance : public Error {
 public:
  using Error::Error;
};

class SketchDimExceedsRows : public Error {
 public:
  using Error::Error;
};

class InnerSolveStalled : public Error {
 public:
  using Error::Error;
};

class CertificateViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateBracket : public Error {
 public:
  using Error::Error;
};

class BracketExhausted : public Error {
 public:
  using Error::Error;
};

class InvalidBracket : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class NonBinaryLabel : public Error {
 public:
  using Error::Error;
};

// Configuration errors (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Generic numerical failures not covered above (exit code 3).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Filesystem / stream failures (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ianpe
