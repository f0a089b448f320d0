#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmtl {

// Base of every error thrown by the library. Subclasses name the failure
// class so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class TopologyError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class DegenerateInputError : public Error { using Error::Error; };
class TrainingStepError : public Error { using Error::Error; };
class EvaluationError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };

class DivergedError : public Error {
 public:
  DivergedError(std::size_t round, const std::string& what)
      : Error("diverged at round " + std::to_string(round) + ": " + what), round_(round) {}
  std::size_t round() const { return round_; }

 private:
  std::size_t round_;
};

}  // namespace fmtl
