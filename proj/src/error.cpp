#include "dde/error.hpp"

namespace dde {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "ok";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::Validation: return "validation error";
    case ErrorCode::Capacity: return "capacity error";
    case ErrorCode::Numeric: return "numeric error";
    case ErrorCode::Io: return "I/O error";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace dde
