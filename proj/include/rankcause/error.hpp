#pragma once

#include <stdexcept>
#include <string>

namespace rankcause {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  simulation = 3,
  data = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::internal; }
};

// Invalid parameters, ranges, or configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

// Malformed, ragged, or non-finite input data.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

// Numerical blow-up while integrating a benchmark system.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, double time_reached)
      : Error(what + " (model time reached: " + std::to_string(time_reached) + ")"),
        time_reached_(time_reached) {}
  ExitCode exit_code() const noexcept override { return ExitCode::simulation; }
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rankcause
