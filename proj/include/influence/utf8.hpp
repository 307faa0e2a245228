#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace influence::utf8 {

// Byte offset of the first malformed sequence, or nullopt when `text` is
// well-formed UTF-8 (no overlongs, no surrogates, nothing above U+10FFFF).
std::optional<std::size_t> find_invalid(std::string_view text);

// Decodes the code point starting at `pos` and advances `pos` past it.
// Input must be valid UTF-8.
char32_t decode_next(std::string_view text, std::size_t& pos);

void append(std::string& out, char32_t cp);

std::size_t count_code_points(std::string_view text);

// Byte offset of code point number `cp_index`; cp_index may equal the
// code point count, giving text.size(). nullopt when past the end.
std::optional<std::size_t> byte_offset_of(std::string_view text,
                                          std::size_t cp_index);

inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

inline bool is_boundary(std::string_view text, std::size_t pos) {
  return pos == 0 || pos >= text.size() ||
         !is_continuation(static_cast<unsigned char>(text[pos]));
}

// Word boundaries are ASCII whitespace only.
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace influence::utf8
