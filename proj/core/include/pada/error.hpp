#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pada {

enum class ErrorKind {
  io,
  bad_magic,
  bad_version,
  truncated,
  format,
  structural,
  range,
  config,
  validation,
  divergence,
  empty,
};

/// Short machine-readable category, e.g. "structural".
std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pada
