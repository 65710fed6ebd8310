#pragma once

#include <stdexcept>
#include <string>

namespace beamlab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad input: violated precondition, out-of-domain point, malformed config.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A numerical diagnostic tripped (instability, divergence, degeneracy).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace beamlab
