#pragma once

#include <stdexcept>
#include <string>

namespace oareco {

/// Bad arguments, shapes, configuration or file contents. Maps to CLI exit code 1.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A weight file or weight map that does not match the architecture manifest.
class ManifestError : public InvalidInput {
 public:
  ManifestError(const std::string& tensor, const std::string& what)
      : InvalidInput("manifest error for tensor '" + tensor + "': " + what), tensor_(tensor) {}

  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

/// Solver divergence or non-finite intermediate values. Maps to CLI exit code 2.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oareco
