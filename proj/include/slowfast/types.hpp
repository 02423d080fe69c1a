#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace slowfast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ConstSpan = std::span<const double>;
using OutSpan = std::span<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 6.283185307179586476925286766559005768;

// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller violated a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internal consistency check failed (e.g. a matrix that must be symmetric is not).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite state produced while time stepping.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline ConstSpan as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline OutSpan as_span(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace slowfast
