#pragma once

#include <stdexcept>
#include <string>

namespace spenc {

// Malformed input file (bad header, wrong token count, unparsable field).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input that violates a precondition (negative count,
// zero-sum matrix where a positive total is required, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Bad model / training configuration (K > I, non-positive learning rate).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value detected during inference; carries the name of the
// offending parameter block.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& block, const std::string& what)
      : std::runtime_error("block '" + block + "': " + what), block_(block) {}

  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

}  // namespace spenc
