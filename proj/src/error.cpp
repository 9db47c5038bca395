#include "mathqac/error.hpp"

namespace mathqac {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_query: return "invalid query";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::io_error: return "i/o error";
    case ErrorCode::empty_corpus: return "empty corpus";
    case ErrorCode::format_error: return "format error";
    case ErrorCode::internal_error: return "internal error";
  }
  return "unknown error";
}

}  // namespace mathqac
