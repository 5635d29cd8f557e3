#include "psychat/text.hpp"

namespace psychat::text {

std::size_t utf8_sequence_length(unsigned char lead) noexcept {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 1;
}

std::vector<std::string_view> utf8_chars(std::string_view s) {
    std::vector<std::string_view> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t len = utf8_sequence_length(static_cast<unsigned char>(s[i]));
        if (i + len > s.size()) len = 1;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
                len = 1;
                break;
            }
        }
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

char32_t decode_utf8(std::string_view s) noexcept {
    if (s.empty()) return U'\uFFFD';
    const auto b0 = static_cast<unsigned char>(s[0]);
    const std::size_t len = utf8_sequence_length(b0);
    if (len == 1) return b0 < 0x80 ? char32_t(b0) : U'\uFFFD';
    if (s.size() < len) return U'\uFFFD';
    char32_t cp = b0 & (0x7F >> len);
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[k]);
        if ((b & 0xC0) != 0x80) return U'\uFFFD';
        cp = (cp << 6) | (b & 0x3F);
    }
    return cp;
}

std::size_t codepoint_count(std::string_view s) noexcept {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

std::uint64_t byte_sum(std::string_view s) noexcept {
    std::uint64_t h = 0;
    for (unsigned char c : s) h += c;
    return h;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool is_blank(std::string_view s) noexcept {
    for (auto ch : utf8_chars(s)) {
        const char32_t c = decode_utf8(ch);
        const bool space = c == U' ' || c == U'\t' || c == U'\r' || c == U'\n' || c == U'\f' || c == U'\v' ||
                           c == 0xA0 || c == 0x3000;
        if (!space) return false;
    }
    return true;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace psychat::text
