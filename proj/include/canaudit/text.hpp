#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace canaudit::text {

// Minimal UTF-8 handling. Invalid bytes decode as U+FFFD and re-encode
// as themselves is not attempted; inputs are expected to be valid UTF-8
// (JSON guarantees this for everything read through the toolkit).

std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(std::string& out, char32_t cp);

// First `max_cp` codepoints of s (never splits a codepoint).
std::string truncate_codepoints(std::string_view s, std::size_t max_cp);

bool is_ascii_space(char32_t c);
bool is_ascii_punct(char32_t c);
bool is_ascii_upper(char32_t c);
bool is_ascii_alpha(char32_t c);

// Emoji-like codepoints stripped by the style-invariance filter:
// symbol/pictograph planes plus ZWJ and VS-16.
bool is_emoji(char32_t c);

// Whitespace-delimited tokens.
std::vector<std::string> split_tokens(std::string_view s);

// Lowercased, punctuation-trimmed form used for grounding overlap and
// the utility metrics; returns "" if nothing remains.
std::string normalize_token(std::string_view token);

// Normalized tokens of s, empties dropped.
std::vector<std::string> normalized_tokens(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace canaudit::text
