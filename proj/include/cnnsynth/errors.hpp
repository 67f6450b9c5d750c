#pragma once

#include <stdexcept>
#include <string>

namespace cnnsynth {

// Base of every error thrown by the library. Input/validation problems map to
// CLI exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TraceError : public Error {
 public:
  using Error::Error;
};

class CostError : public Error {
 public:
  using Error::Error;
};

class ClusterError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cnnsynth
