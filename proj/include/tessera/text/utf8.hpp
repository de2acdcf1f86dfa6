#pragma once

#include <string>
#include <string_view>

namespace tessera::utf8 {

/// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

/// Number of code points in `bytes`.
std::size_t length(std::string_view bytes);

/// Substring by code-point offsets [begin, end).
std::string substr(std::string_view bytes, std::size_t begin, std::size_t end);

bool is_space(char32_t c);
bool is_upper(char32_t c);
bool is_digit(char32_t c);
/// ASCII punctuation plus common Latin-1 and general punctuation marks.
bool is_punct(char32_t c);
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);

std::string to_lower(std::string_view s);

/// Uppercases the first code point only.
std::string capitalize(std::string_view s);

/// True iff the first code point is uppercase.
bool starts_upper(std::string_view s);

/// Removes every whitespace code point.
std::u32string strip_spaces(std::u32string_view s);

}  // namespace tessera::utf8
