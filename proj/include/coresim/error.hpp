#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace coresim {

// All domain failures carry a stable machine-readable code (e.g. "UnknownMessage",
// "NoLinkProfile") next to the human-readable message. CLI maps codes to exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Configuration / usage problems. CLI exits 2 for these, 1 for everything else.
class ConfigError : public Error {
 public:
  ConfigError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

}  // namespace coresim
