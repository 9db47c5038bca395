#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mathqac {

enum class ErrorCode {
  invalid_query,
  invalid_argument,
  io_error,
  empty_corpus,
  format_error,
  internal_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mathqac
