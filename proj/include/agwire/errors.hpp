// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace agwire {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a physical function (e.g. a nonpositive wavelength).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent scene description.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A monitor was placed where it cannot measure what it is meant to measure.
class MonitorPlacementError : public Error {
 public:
  using Error::Error;
};

/// Non-finite field values appeared during time stepping.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Two results cannot be combined because they were produced under different conditions.
class ComparabilityError : public Error {
 public:
  using Error::Error;
};

class NoBoundModeError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Degenerate input data (e.g. an all-zero histogram).
class DegenerateDataError : public FitError {
 public:
  using FitError::FitError;
};

class SweepError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; `field` names the offending JSON path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace agwire
