#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qasis {

/// Wrong sizes, wrong arity or otherwise malformed arguments.
class InvalidArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain an operation accepts (t outside [0,1],
/// alpha outside (0,1), ...). `indices` names offending positions when the
/// input is a vector.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what, std::vector<std::size_t> indices = {})
      : std::domain_error(what), indices_(std::move(indices)) {}

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

class EmptyInputError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

/// The Kaplan-Meier distribution function never reaches the requested level.
class UnreachableQuantileError : public std::runtime_error {
 public:
  UnreachableQuantileError(double requested, double max_identifiable)
      : std::runtime_error("quantile level " + std::to_string(requested) +
                           " is not identifiable; the Kaplan-Meier distribution function "
                           "reaches at most " +
                           std::to_string(max_identifiable)),
        requested_(requested),
        max_identifiable_(max_identifiable) {}

  double requested() const noexcept { return requested_; }
  double max_identifiable() const noexcept { return max_identifiable_; }

 private:
  double requested_;
  double max_identifiable_;
};

/// Kernel weights vanish at the evaluation point.
class DegenerateNeighborhoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qasis
