#pragma once

#include <stdexcept>
#include <string>

namespace samast {

// Base of every error raised by the library. The CLI maps the three
// families below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or inconsistent hyperparameters (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public DataError {
 public:
  using DataError::DataError;
};

// Broken calling contract: wrong shapes, bad labels, non-scalar losses.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class LabelError : public ContractError {
 public:
  LabelError(const std::string& what, long long index)
      : ContractError(what), index_(index) {}
  long long index() const { return index_; }

 private:
  long long index_;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::size_t row)
      : Error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Checkpoint loading.
class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatchError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ShapeMismatchError : public LoadError {
 public:
  ShapeMismatchError(const std::string& what, std::string parameter)
      : LoadError(what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

class TruncatedFileError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ConfigMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace samast
