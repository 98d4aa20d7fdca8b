#pragma once

#include <stdexcept>
#include <string>

namespace entcoef {

// Failure classes mirror the process exit codes used by the command line
// tool: verification failures exit 1, malformed input exits 2, bad
// configuration exits 3.
enum class ErrorKind { verification = 1, input = 2, config = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& message) {
  throw Error(ErrorKind::input, message);
}

[[noreturn]] inline void fail_config(const std::string& message) {
  throw Error(ErrorKind::config, message);
}

[[noreturn]] inline void fail_verification(const std::string& message) {
  throw Error(ErrorKind::verification, message);
}

}  // namespace entcoef
