#include "lexforge/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "lexforge/error.hpp"

namespace lexforge::unicode {

bool is_valid_utf8(std::string_view text) {
    std::size_t i = 0;
    const auto n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t len;
        char32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
            return false;
        i += len;
    }
    return true;
}

char32_t next_code_point(std::string_view text, std::size_t& pos) {
    const auto c = static_cast<unsigned char>(text[pos]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (c < 0x80) {
        cp = c;
    } else if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > text.size()) {
        pos = text.size();
        return 0xFFFD;
    }
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(text[pos + k]) & 0x3F);
    pos += len;
    return cp;
}

std::string nfc(std::string_view text) {
    if (!is_valid_utf8(text)) throw ValidationError("text is not valid UTF-8");
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFC normalizer unavailable: ") + u_errorName(status));
    const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    if (normalizer->isNormalized(src, status) && U_SUCCESS(status)) return std::string(text);
    status = U_ZERO_ERROR;
    const icu::UnicodeString out = normalizer->normalize(src, status);
    if (U_FAILURE(status)) throw Error(std::string("NFC normalization failed: ") + u_errorName(status));
    std::string result;
    out.toUTF8String(result);
    return result;
}

bool contains_kanji(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size())
        if (is_kanji(next_code_point(text, pos))) return true;
    return false;
}

bool is_punctuation_or_symbol(char32_t cp) {
    const auto mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
    return (mask & (U_GC_P_MASK | U_GC_S_MASK | U_GC_Z_MASK)) != 0;
}

std::size_t code_point_count(std::string_view text) {
    std::size_t pos = 0, n = 0;
    while (pos < text.size()) {
        next_code_point(text, pos);
        ++n;
    }
    return n;
}

std::string_view trim(std::string_view text) {
    constexpr std::string_view ideographic_space = "　";
    bool changed = true;
    while (changed && !text.empty()) {
        changed = false;
        while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '\n' ||
                                 text.front() == '\r')) {
            text.remove_prefix(1);
            changed = true;
        }
        while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\n' ||
                                 text.back() == '\r')) {
            text.remove_suffix(1);
            changed = true;
        }
        if (text.starts_with(ideographic_space)) {
            text.remove_prefix(ideographic_space.size());
            changed = true;
        }
        if (text.ends_with(ideographic_space)) {
            text.remove_suffix(ideographic_space.size());
            changed = true;
        }
    }
    return text;
}

}  // namespace lexforge::unicode
