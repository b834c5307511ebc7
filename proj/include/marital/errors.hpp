#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace marital {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or configuration value violates its documented constraint.
class InvalidParams : public Error {
 public:
  InvalidParams(std::string key, std::string constraint)
      : Error(key + ": " + constraint), key_(std::move(key)), constraint_(std::move(constraint)) {}
  const std::string& key() const noexcept { return key_; }
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string key_;
  std::string constraint_;
};

class InvalidTrajectory : public Error {
 public:
  using Error::Error;
};

// A sweep produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t node, int iteration = -1)
      : Error(what), node_(node), iteration_(iteration) {}
  std::size_t node() const noexcept { return node_; }
  // -1 when raised outside an FBS iteration.
  int iteration() const noexcept { return iteration_; }

 private:
  std::size_t node_;
  int iteration_;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// r1*r2 == u0^2: the zeroth-order particular solution does not exist.
class ResonantParameters : public Error {
 public:
  using Error::Error;
};

// Repeated zeroth-order mode; the closed form assumes distinct rates.
class RepeatedEigenvalue : public Error {
 public:
  using Error::Error;
};

// alpha in {0, 1}: the interior control formula does not apply.
class AltruistRegime : public Error {
 public:
  using Error::Error;
};

class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};

}  // namespace marital
