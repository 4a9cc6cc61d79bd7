#pragma once

#include <stdexcept>
#include <string>

namespace milt {

enum class ErrorKind {
  InvalidArgument,  // malformed input or violated precondition
  Parse,            // unreadable file contents
  NotFound,         // unknown dataset, bag, or session
  State,            // operation not valid in the current session state
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace milt
