#pragma once

#include <stdexcept>
#include <string>

namespace ngate {

enum class ErrorKind {
  kIo,        // file could not be opened, read or written
  kFormat,    // malformed container, manifest or CSV
  kData,      // inputs violate a precondition (class absent, dimension mismatch, ...)
  kModel,     // model kind/scheme/version/checksum problems
  kConfig,    // invalid configuration values
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ngate
