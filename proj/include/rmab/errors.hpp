#pragma once

#include <stdexcept>
#include <string>

namespace rmab {

/// Base of every domain failure raised by the library. `code()` is a stable
/// machine-readable identifier (the CLI reports it in its JSON error).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidModel : public Error {
 public:
  explicit InvalidModel(const std::string& msg) : Error("InvalidModel", msg) {}
};

class Infeasible : public Error {
 public:
  explicit Infeasible(const std::string& msg) : Error("Infeasible", msg) {}
};

class Unbounded : public Error {
 public:
  explicit Unbounded(const std::string& msg) : Error("Unbounded", msg) {}
};

class StructureNotFound : public Error {
 public:
  explicit StructureNotFound(const std::string& msg) : Error("StructureNotFound", msg) {}
};

class OutOfRange : public Error {
 public:
  explicit OutOfRange(const std::string& msg) : Error("OutOfRange", msg) {}
};

class Diverged : public Error {
 public:
  explicit Diverged(const std::string& msg) : Error("Diverged", msg) {}
};

class StateSpaceTooLarge : public Error {
 public:
  explicit StateSpaceTooLarge(const std::string& msg) : Error("StateSpaceTooLarge", msg) {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& msg, double final_span)
      : Error("NoConvergence", msg), final_span_(final_span) {}
  double final_span() const noexcept { return final_span_; }

 private:
  double final_span_;
};

/// Raised when the passive set D(nu) of a class fails to grow monotonically.
/// The witness: state `state` is passive-optimal at `nu_low` but active-optimal
/// at the larger charge `nu_high`.
class NotIndexable : public Error {
 public:
  NotIndexable(int class_index, int state, double nu_low, double nu_high);
  int class_index() const noexcept { return class_index_; }
  int state() const noexcept { return state_; }
  double nu_low() const noexcept { return nu_low_; }
  double nu_high() const noexcept { return nu_high_; }

 private:
  int class_index_;
  int state_;
  double nu_low_;
  double nu_high_;
};

}  // namespace rmab
