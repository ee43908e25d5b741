#pragma once

#include <stdexcept>
#include <string>

namespace ipoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a derivative is requested at a point where it does not exist.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class GradientCheckError : public Error {
 public:
  GradientCheckError(std::string callback, double max_deviation)
      : Error("gradient check failed for '" + callback +
              "' (max deviation " + std::to_string(max_deviation) + ")"),
        callback_(std::move(callback)),
        max_deviation_(max_deviation) {}

  const std::string& callback() const noexcept { return callback_; }
  double max_deviation() const noexcept { return max_deviation_; }

 private:
  std::string callback_;
  double max_deviation_;
};

/// A constraint is not strictly negative where the barrier needs it to be.
class InteriorViolation : public Error {
 public:
  InteriorViolation(std::string constraint, int node, double value)
      : Error("constraint " + constraint + " is not strictly negative at node " +
              std::to_string(node) + " (value " + std::to_string(value) + ")"),
        constraint_(std::move(constraint)),
        node_(node),
        value_(value) {}

  const std::string& constraint() const noexcept { return constraint_; }
  int node() const noexcept { return node_; }
  double value() const noexcept { return value_; }

 private:
  std::string constraint_;
  int node_;
  double value_;
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(int block)
      : Error("numerically singular pivot in block " + std::to_string(block)),
        block_(block) {}

  int block() const noexcept { return block_; }

 private:
  int block_;
};

}  // namespace ipoc
