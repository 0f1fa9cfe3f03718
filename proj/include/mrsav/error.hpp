#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mrsav {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a value was violated (non-finite input, bad parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration file or CLI flag problem. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared inside a time step. The energy bound rules
/// this out for valid models, so seeing one means a bug or a broken model.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint64_t step_index, double energy, const std::string& what)
      : Error("step " + std::to_string(step_index) + " (E^n = " + std::to_string(energy) +
              "): " + what),
        step_index_(step_index),
        energy_(energy) {}
  std::uint64_t step_index() const noexcept { return step_index_; }
  double energy() const noexcept { return energy_; }

 private:
  std::uint64_t step_index_;
  double energy_;
};

}  // namespace mrsav
