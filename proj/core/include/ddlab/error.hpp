#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddlab {

enum class ErrorKind {
  Domain,           // precondition on an argument violated
  Config,           // run configuration rejected
  Divergence,       // non-finite state during integration
  Quadrature,       // adaptive quadrature missed its tolerance
  Degenerate,       // Gaussian measure has no Lebesgue density
  NotPositiveDefinite,
  InsufficientData,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(double time, const std::string& what, std::ptrdiff_t trajectory = -1)
      : Error(ErrorKind::Divergence, what), time_(time), trajectory_(trajectory) {}
  double time() const noexcept { return time_; }
  // -1 when the failure did not come from an ensemble member.
  std::ptrdiff_t trajectory() const noexcept { return trajectory_; }

 private:
  double time_;
  std::ptrdiff_t trajectory_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(double achieved, double requested, const std::string& what)
      : Error(ErrorKind::Quadrature, what), achieved_(achieved), requested_(requested) {}
  double achieved() const noexcept { return achieved_; }
  double requested() const noexcept { return requested_; }

 private:
  double achieved_;
  double requested_;
};

class DegenerateMeasureError : public Error {
 public:
  explicit DegenerateMeasureError(const std::string& what) : Error(ErrorKind::Degenerate, what) {}
};

class KernelNotPsdError : public Error {
 public:
  explicit KernelNotPsdError(const std::string& what)
      : Error(ErrorKind::NotPositiveDefinite, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorKind::InsufficientData, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

struct ConfigIssue {
  int line = 0;  // 0 when the issue is not tied to a line (e.g. missing key)
  std::string message;
};

// Carries every problem found in a config, not just the first one.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

}  // namespace ddlab
