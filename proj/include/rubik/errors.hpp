#pragma once

#include <stdexcept>
#include <string>

namespace rubik {

/// Malformed input text (edge lists, config files). Carries a line number
/// when one is known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument to a toolkit operation (bad generator parameters,
/// zero-sized windows, infeasible targets).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Hardware or experiment configuration that cannot be simulated
/// (e.g. a feature vector larger than the G-D cache).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inconsistent tensor shapes in the reference executor.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Lowering detected a broken plan invariant (e.g. a shared pair whose
/// consumers ended up in different PEs).
class CodegenError : public std::logic_error {
 public:
  explicit CodegenError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace rubik
