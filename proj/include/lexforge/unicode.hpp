#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lexforge::unicode {

/// NFC-normalizes UTF-8 text. Throws ValidationError on invalid UTF-8.
std::string nfc(std::string_view text);

bool is_valid_utf8(std::string_view text);

/// Decodes one code point starting at `pos`; advances `pos`. Invalid bytes decode as U+FFFD.
char32_t next_code_point(std::string_view text, std::size_t& pos);

/// CJK Unified Ideographs, Extension A, and CJK Compatibility Ideographs.
constexpr bool is_kanji(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0xF900 && cp <= 0xFAFF);
}

bool contains_kanji(std::string_view text);

/// Unicode general category P*, S*, or Z*.
bool is_punctuation_or_symbol(char32_t cp);

/// ASCII or full-width decimal digit.
constexpr bool is_arabic_digit(char32_t cp) {
    return (cp >= U'0' && cp <= U'9') || (cp >= 0xFF10 && cp <= 0xFF19);
}

std::size_t code_point_count(std::string_view text);

/// Strips ASCII whitespace and U+3000 from both ends.
std::string_view trim(std::string_view text);

}  // namespace lexforge::unicode
