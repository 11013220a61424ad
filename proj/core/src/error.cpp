#include "pada/error.hpp"

namespace pada {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::bad_version: return "bad_version";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::format: return "format";
    case ErrorKind::structural: return "structural";
    case ErrorKind::range: return "range";
    case ErrorKind::config: return "config";
    case ErrorKind::validation: return "validation";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::empty: return "empty";
  }
  return "unknown";
}

}  // namespace pada
