#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace collapse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An Euler step collapsed the amplitude vector (dt too large for gamma).
class DegenerateStepError : public Error {
 public:
  explicit DegenerateStepError(double norm)
      : Error("step produced degenerate state (pre-normalization norm " + std::to_string(norm) +
              ")") {}

  DegenerateStepError(double norm, double time)
      : Error("step produced degenerate state at t = " + std::to_string(time) +
              " (pre-normalization norm " + std::to_string(norm) + ")"),
        time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_ = -1.0;
};

/// The stored sample grid is too coarse for the detector's persistence window.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A failure inside one trajectory of an ensemble run.
class TrajectoryError : public Error {
 public:
  TrajectoryError(std::size_t index, const std::string& what)
      : Error("trajectory " + std::to_string(index) + ": " + what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace collapse
