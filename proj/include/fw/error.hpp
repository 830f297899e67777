#pragma once

#include <stdexcept>
#include <string>

namespace fw {

// Arguments that violate an operation's preconditions (shapes, labels, ranges).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model, preset or generator configurations that cannot be built.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Filesystem failures. The message always names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupt, truncated or mismatching on-disk data (weights, samples, manifests).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fw
