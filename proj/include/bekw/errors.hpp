#pragma once

#include <stdexcept>
#include <string>

namespace bekw {

// Invalid argument values, unusable data, domain violations.  CLI exit code 2.
class input_error : public std::domain_error {
 public:
  explicit input_error(const std::string& msg) : std::domain_error("bekw: " + msg) {}
};

// An iterative solver failed to converge.  CLI exit code 3.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& msg, double best = 0.0)
      : std::runtime_error("bekw: " + msg), best_estimate(best) {}
  double best_estimate;
};

// A quadrature or series evaluation could not reach the requested tolerance.
// Carries the best estimate so callers can degrade gracefully.  CLI exit code 3.
class accuracy_error : public std::runtime_error {
 public:
  explicit accuracy_error(const std::string& msg, double best, double err)
      : std::runtime_error("bekw: " + msg), best_estimate(best), error_estimate(err) {}
  double best_estimate;
  double error_estimate;
};

}  // namespace bekw
