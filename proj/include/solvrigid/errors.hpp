#pragma once

#include <stdexcept>
#include <string>

namespace solvrigid {

/// Malformed or non-conforming input (wrong block shapes, bad JSON, empty sets).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside the mathematical domain of an operation (t <= 0, p == q, singular X).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_value)
      : std::runtime_error(what), last_value_(last_value) {}
  double last_value() const { return last_value_; }

 private:
  double last_value_;
};

/// Log-stretches are not of the form <v_i, v> for a common v.
class NotInUniformSubgroup : public std::runtime_error {
 public:
  explicit NotInUniformSubgroup(const std::string& what) : std::runtime_error(what) {}
};

/// tau_j called on an element with a nonzero perturbation above level j.
class NotInKernel : public std::runtime_error {
 public:
  NotInKernel(const std::string& what, int block) : std::runtime_error(what), block_(block) {}
  int block() const { return block_; }

 private:
  int block_;
};

/// Top-level coefficient solve failed: the element is outside the span of the generators.
class InfiniteIndexSuspected : public std::runtime_error {
 public:
  explicit InfiniteIndexSuspected(const std::string& what) : std::runtime_error(what) {}
};

/// An exact composition left the representable class of perturbations.
class NotExactlyRepresentable : public std::runtime_error {
 public:
  explicit NotExactlyRepresentable(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace solvrigid

namespace solvrigid {

/// A field lookup fell outside the sampled region of a ConfField.
class CoverageError : public DomainError {
 public:
  explicit CoverageError(const std::string& what) : DomainError(what) {}
};

}  // namespace solvrigid
