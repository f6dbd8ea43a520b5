#pragma once

#include <stdexcept>
#include <string>

namespace bllab {

enum class ErrorKind {
  input,      // malformed files, bad parameters, shape mismatches
  domain,     // a map evaluated outside its domain, degenerate pins
  budget,     // enumeration would exceed the configured cell budget
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& what) {
  throw Error(ErrorKind::input, what);
}

[[noreturn]] inline void fail_domain(const std::string& what) {
  throw Error(ErrorKind::domain, what);
}

[[noreturn]] inline void fail_budget(const std::string& what) {
  throw Error(ErrorKind::budget, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail_input(what);
}

}  // namespace bllab
