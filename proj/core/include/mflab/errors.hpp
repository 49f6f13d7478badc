#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// a rejected parameter, with the field that caused it ("beta1")
struct ParamError : InvalidArgument {
  ParamError(std::string f, const std::string& what)
      : InvalidArgument(f + ": " + what), field(std::move(f)) {}
  std::string field;
};

struct DepthExceeded : Error {
  using Error::Error;
};

struct InfeasibleDrift : Error {
  using Error::Error;
};

struct SeparationUnsatisfiable : Error {
  using Error::Error;
};

struct DegenerateFit : Error {
  using Error::Error;
};

struct EmptyTarget : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct SearchIntervalExhausted : Error {
  using Error::Error;
};

// config problems carry the offending key path ("alpha.a")
struct ConfigError : Error {
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_path(std::move(key)), reason(what) {}
  std::string key_path;
  std::string reason;
};

}  // namespace mflab
