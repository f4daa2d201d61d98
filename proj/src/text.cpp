#include "canaudit/text.hpp"

#include <cctype>

namespace canaudit::text {

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 >> 5) == 0x6 && i + 1 < s.size()) {
            cp = ((b0 & 0x1F) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3F);
            len = 2;
        } else if ((b0 >> 4) == 0xE && i + 2 < s.size()) {
            cp = ((b0 & 0x0F) << 12) |
                 ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                 (static_cast<unsigned char>(s[i + 2]) & 0x3F);
            len = 3;
        } else if ((b0 >> 3) == 0x1E && i + 3 < s.size()) {
            cp = ((b0 & 0x07) << 18) |
                 ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                 ((static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                 (static_cast<unsigned char>(s[i + 3]) & 0x3F);
            len = 4;
        } else {
            cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

std::string truncate_codepoints(std::string_view s, std::size_t max_cp) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < s.size() && count < max_cp) {
        const unsigned char b = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((b >> 5) == 0x6) len = 2;
        else if ((b >> 4) == 0xE) len = 3;
        else if ((b >> 3) == 0x1E) len = 4;
        if (i + len > s.size()) len = 1;
        i += len;
        ++count;
    }
    return std::string(s.substr(0, i));
}

bool is_ascii_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
           c == U'\v';
}

bool is_ascii_punct(char32_t c) {
    return c < 0x80 && std::ispunct(static_cast<int>(c)) != 0;
}

bool is_ascii_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }

bool is_ascii_alpha(char32_t c) {
    return (c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z');
}

bool is_emoji(char32_t c) {
    if (c >= 0x1F000 && c <= 0x1FFFF) return true;  // pictographs, emoticons, flags
    if (c >= 0x2600 && c <= 0x27BF) return true;    // misc symbols, dingbats
    if (c >= 0x2B00 && c <= 0x2BFF) return true;    // misc symbols and arrows
    if (c == 0xFE0F || c == 0x200D) return true;    // VS-16, ZWJ
    return false;
}

std::vector<std::string> split_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char32_t cp : decode_utf8(s)) {
        if (is_ascii_space(cp)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            append_utf8(cur, cp);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string normalize_token(std::string_view token) {
    std::vector<char32_t> cps = decode_utf8(token);
    std::size_t b = 0;
    std::size_t e = cps.size();
    while (b < e && is_ascii_punct(cps[b])) ++b;
    while (e > b && is_ascii_punct(cps[e - 1])) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i) {
        char32_t c = cps[i];
        if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
        append_utf8(out, c);
    }
    return out;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (const std::string& t : split_tokens(s)) {
        std::string n = normalize_token(t);
        if (!n.empty()) out.push_back(std::move(n));
    }
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace canaudit::text
