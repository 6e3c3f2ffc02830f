#pragma once

#include <stdexcept>
#include <string>

namespace xferlab {

// Process exit codes used by the command line front end.
enum class ExitCode : int {
  kOk = 0,
  kGeneric = 1,
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
  kMissingArtifact = 5,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::kGeneric)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Tensor shapes that do not fit the requested primitive.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension error: " + what) {}
};

// Index outside of a valid range (class labels, coordinates).
class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error("index error: " + what) {}
};

// Violated precondition of an operation.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract error: " + what) {}
};

// Parameter layouts or fingerprints that do not line up.
class CompatibilityError : public Error {
 public:
  explicit CompatibilityError(const std::string& what)
      : Error("compatibility error: " + what, ExitCode::kData) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("configuration error: " + what, ExitCode::kConfig) {}
};

// Malformed or inconsistent files on disk.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error("format error: " + what, ExitCode::kData) {}
};

// Files that parse but disagree with each other (e.g. image/label counts).
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what)
      : Error("consistency error: " + what, ExitCode::kData) {}
};

class FilesystemError : public Error {
 public:
  explicit FilesystemError(const std::string& what)
      : Error("filesystem error: " + what, ExitCode::kData) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error("numeric failure: " + what, ExitCode::kNumeric) {}
};

// Quantities that are mathematically undefined for the given input
// (zero-norm cosine, zero-variance correlation, zero normalization base).
class UndefinedError : public Error {
 public:
  explicit UndefinedError(const std::string& what)
      : Error("undefined: " + what, ExitCode::kNumeric) {}
};

class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& what)
      : Error("missing artifact: " + what, ExitCode::kMissingArtifact) {}
};

}  // namespace xferlab
