#pragma once

#include <stdexcept>
#include <string>

namespace sk {

// Input violates an operation's domain (mismatched spaces, bad parameters).
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

// A computation degenerated at runtime (vanished mass, failed factorization).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A documented precondition was not met by an otherwise well-typed input.
class precondition_error : public std::invalid_argument {
 public:
  explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

// Configuration file or flag rejected before any computation started.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace sk
