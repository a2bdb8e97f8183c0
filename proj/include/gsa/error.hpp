#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsa {

/// Base for all domain errors. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}
  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Source point set is collinear or coincident, or has fewer than 3 points.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Rendered views carry no alpha for one of the models.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsa
