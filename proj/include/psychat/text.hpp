#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small UTF-8 and hashing helpers shared across modules.
namespace psychat::text {

/// Byte length of the UTF-8 sequence starting with `lead`; 1 for invalid lead bytes.
std::size_t utf8_sequence_length(unsigned char lead) noexcept;

/// Splits into code point substrings. Invalid bytes become single-byte pieces.
std::vector<std::string_view> utf8_chars(std::string_view s);

/// Decodes the code point starting at `s`; U+FFFD for malformed input.
char32_t decode_utf8(std::string_view s) noexcept;

std::size_t codepoint_count(std::string_view s) noexcept;

/// Sum of the UTF-8 bytes of `s`.
std::uint64_t byte_sum(std::string_view s) noexcept;

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

bool is_blank(std::string_view s) noexcept;

std::string join(const std::vector<std::string> &parts, std::string_view sep);

} // namespace psychat::text
