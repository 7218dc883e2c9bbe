#pragma once

#include <stdexcept>
#include <string>

namespace obb {

/// Raised when an iterate, gradient or oracle goes non-finite or fails to converge.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// bb1/bb2 denominators vanish. Callers choose the fallback.
class DegenerateSecant : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected; `path()` names the offending field (e.g. "policies[1].alpha_min").
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string path, const std::string& what)
      : std::invalid_argument(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace obb
