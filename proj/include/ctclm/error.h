// include/ctclm/error.h

#ifndef CTCLM_ERROR_H_
#define CTCLM_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctclm {

// Base of everything the library throws on bad input. The CLI maps this
// family to exit code 2; anything else escaping a command is exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (RIFF header, TSV row, logit file, ...).
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// Well-formed input using a feature we do not handle (e.g. 24-bit PCM).
class UnsupportedError : public InputError {
 public:
  using InputError::InputError;
};

// Inconsistent or out-of-range configuration values.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Text parse failure that knows where it happened.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t line, const std::string &what)
      : FormatError("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// WER/CER requested for an empty reference.
class UndefinedMetricError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace ctclm

#endif  // CTCLM_ERROR_H_
