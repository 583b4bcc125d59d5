#pragma once

#include <stdexcept>
#include <string>

namespace optoatp {

// Process exit codes used by the command-line tool. Each exception type below
// maps onto exactly one of them.
enum class ExitCode : int {
  kOk = 0,
  kData = 2,
  kNumerical = 3,
  kInfeasible = 4,
  kConfig = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Invalid argument to a numerical routine (non-finite value, negative light,
// dimension mismatch).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::kNumerical, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ExitCode::kInfeasible, what) {}
};

}  // namespace optoatp
