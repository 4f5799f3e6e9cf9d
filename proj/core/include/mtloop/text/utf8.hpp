#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mtloop::text {

// Decodes UTF-8 into scalar values. Invalid sequences decode to U+FFFD
// one byte at a time so that decoding never fails.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view codepoints);
void append_utf8(std::string& out, char32_t cp);

// Number of scalar values in a UTF-8 string.
std::size_t codepoint_length(std::string_view bytes);

// Whitespace as understood by Python's str.split(): the reference BLEU
// tokenizer splits on exactly this set.
bool is_unicode_space(char32_t cp);

// Trims is_unicode_space characters from both ends.
std::string trim(std::string_view s);

std::string ascii_lower(std::string_view s);

}  // namespace mtloop::text
