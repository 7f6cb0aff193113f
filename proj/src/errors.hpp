#pragma once

#include <stdexcept>
#include <string>

namespace odnslab {

/// Coarse error categories. The numeric values of Usage/Config/Io/Validation
/// double as CLI exit codes and C API status codes.
enum class Errc {
  Usage = 2,
  Config = 3,
  Io = 4,
  Validation = 5,
  // wire codec
  NameTooLong = 20,
  InvalidName = 21,
  UnsupportedRtype = 22,
  TruncatedMessage = 23,
  MalformedLabel = 24,
  PointerLoop = 25,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace odnslab
