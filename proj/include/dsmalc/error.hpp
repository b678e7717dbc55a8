#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsmalc {

/// Base of every exception thrown by the library. Negative verdicts
/// (a frame failing a condition, a sequent failing in a model) are never
/// reported through exceptions; only malformed input and exhausted budgets are.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally malformed input (bad JSON shape, out-of-range element, ...).
class input_error : public error {
 public:
  using error::error;
};

/// A search or enumeration ran out of its candidate/state budget.
class budget_exceeded : public error {
 public:
  budget_exceeded(const std::string& what, std::size_t explored)
      : error(what + " (explored " + std::to_string(explored) + ")"), explored_(explored) {}

  std::size_t explored() const noexcept { return explored_; }

 private:
  std::size_t explored_;
};

/// An exhaustive quantification (over upsets or valuations) is larger than
/// the configured cap.
class size_cap_exceeded : public error {
 public:
  using error::error;
};

}  // namespace dsmalc
