#pragma once

#include <stdexcept>
#include <string>

namespace raw {

// Error classes map 1:1 onto the CLI's machine-parseable failure classes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* error_class() const noexcept { return "error"; }
};

struct ShapeError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "shape"; }
};

struct ValueError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "value"; }
};

struct NumericError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "numeric"; }
};

struct CapacityError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "capacity"; }
};

struct DataError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "data"; }
};

struct ConfigError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "config"; }
};

struct DegenerateError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "degenerate"; }
};

struct IoError : Error {
  using Error::Error;
  const char* error_class() const noexcept override { return "io"; }
};

}  // namespace raw
