#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mathqac::utf8 {

/// Decodes UTF-8 into code points. Returns nullopt on malformed input
/// (overlong forms, surrogates, truncated sequences, values > U+10FFFF).
std::optional<std::u32string> try_decode(std::string_view bytes);

/// Like try_decode but throws Error(invalid_query) on malformed input.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view code_points);
void append(std::string& out, char32_t code_point);

/// Number of code points; input must be valid UTF-8.
std::size_t length(std::string_view bytes);

/// First `count` code points of `bytes` (or all of it if shorter).
std::string take(std::string_view bytes, std::size_t count);

}  // namespace mathqac::utf8
