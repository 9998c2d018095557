#include "courtsim/zh_text.hpp"

#include <limits>

namespace courtsim::zh {

std::vector<char32_t> codepoints(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto n = text.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < n) {
            const auto b1 = static_cast<unsigned char>(text[i + 1]);
            if ((b1 & 0xC0) == 0x80) {
                cp = (char32_t(b0 & 0x1F) << 6) | (b1 & 0x3F);
                len = 2;
            }
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < n) {
            const auto b1 = static_cast<unsigned char>(text[i + 1]);
            const auto b2 = static_cast<unsigned char>(text[i + 2]);
            if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80) {
                cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(b1 & 0x3F) << 6) | (b2 & 0x3F);
                len = 3;
            }
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < n) {
            const auto b1 = static_cast<unsigned char>(text[i + 1]);
            const auto b2 = static_cast<unsigned char>(text[i + 2]);
            const auto b3 = static_cast<unsigned char>(text[i + 3]);
            if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80 && (b3 & 0xC0) == 0x80) {
                cp = (char32_t(b0 & 0x07) << 18) | (char32_t(b1 & 0x3F) << 12) |
                     (char32_t(b2 & 0x3F) << 6) | (b3 & 0x3F);
                len = 4;
            }
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string trim(std::string_view text) {
    // U+3000 is E3 80 80 in UTF-8.
    std::size_t a = 0, b = text.size();
    auto starts_ideo_space = [&](std::size_t i) {
        return i + 2 < b && static_cast<unsigned char>(text[i]) == 0xE3 &&
               static_cast<unsigned char>(text[i + 1]) == 0x80 &&
               static_cast<unsigned char>(text[i + 2]) == 0x80;
    };
    while (a < b) {
        if (is_space_byte(static_cast<unsigned char>(text[a]))) {
            ++a;
        } else if (starts_ideo_space(a)) {
            a += 3;
        } else {
            break;
        }
    }
    auto ends_ideo_space = [&](std::size_t end) {
        return end >= a + 3 && static_cast<unsigned char>(text[end - 3]) == 0xE3 &&
               static_cast<unsigned char>(text[end - 2]) == 0x80 &&
               static_cast<unsigned char>(text[end - 1]) == 0x80;
    };
    while (b > a) {
        if (is_space_byte(static_cast<unsigned char>(text[b - 1]))) {
            --b;
        } else if (ends_ideo_space(b)) {
            b -= 3;
        } else {
            break;
        }
    }
    return std::string(text.substr(a, b - a));
}

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }
bool is_fullwidth_digit(char32_t cp) { return cp >= 0xFF10 && cp <= 0xFF19; }

namespace {

// Digit value of a Chinese numeral codepoint (standard or formal/banker's
// form), or -1.
int chinese_digit(char32_t cp) {
    switch (cp) {
        case U'零': case U'〇': return 0;
        case U'一': case U'壹': return 1;
        case U'二': case U'两': case U'贰': return 2;
        case U'三': case U'叁': return 3;
        case U'四': case U'肆': return 4;
        case U'五': case U'伍': return 5;
        case U'六': case U'陆': return 6;
        case U'七': case U'柒': return 7;
        case U'八': case U'捌': return 8;
        case U'九': case U'玖': return 9;
        default: return -1;
    }
}

// Multiplier of a small unit (十/百/千), or 0.
long long small_unit(char32_t cp) {
    switch (cp) {
        case U'十': case U'拾': return 10;
        case U'百': case U'佰': return 100;
        case U'千': case U'仟': return 1000;
        default: return 0;
    }
}

bool is_big_unit(char32_t cp) { return cp == U'万' || cp == U'萬' || cp == U'亿'; }

}  // namespace

bool is_numeral(char32_t cp) {
    return is_ascii_digit(cp) || is_fullwidth_digit(cp) || chinese_digit(cp) >= 0 ||
           small_unit(cp) != 0 || is_big_unit(cp);
}

std::size_t numeral_run_length(const std::vector<char32_t>& cps, std::size_t pos) {
    std::size_t i = pos;
    while (i < cps.size()) {
        if (is_numeral(cps[i])) {
            ++i;
        } else if (cps[i] == U',' && i > pos && i + 1 < cps.size() &&
                   is_ascii_digit(cps[i - 1]) && is_ascii_digit(cps[i + 1])) {
            ++i;  // thousands separator inside an ASCII digit run
        } else {
            break;
        }
    }
    return i - pos;
}

std::optional<long long> numeral_to_int(const std::vector<char32_t>& run) {
    constexpr long long kCap = std::numeric_limits<long long>::max() / 16;
    long long total = 0, section = 0, number = 0;
    bool any = false;
    for (const char32_t cp : run) {
        if (cp == U',') continue;
        long long digit = -1;
        if (is_ascii_digit(cp)) {
            digit = cp - U'0';
        } else if (is_fullwidth_digit(cp)) {
            digit = cp - 0xFF10;
        } else if (int d = chinese_digit(cp); d >= 0) {
            digit = d;
        }
        if (digit >= 0) {
            if (number > kCap) return std::nullopt;
            number = number * 10 + digit;
            any = true;
            continue;
        }
        if (const long long unit = small_unit(cp)) {
            // Bare 十 means 10 (十五 = 15).
            section += (number == 0 ? 1 : number) * unit;
            number = 0;
            any = true;
            continue;
        }
        if (cp == U'万' || cp == U'萬') {
            section = (section + number);
            if (section == 0) section = 1;
            total += section * 10000;
            section = 0;
            number = 0;
            any = true;
            continue;
        }
        if (cp == U'亿') {
            long long base = total + section + number;
            if (base == 0) base = 1;
            if (base > kCap) return std::nullopt;
            total = base * 100000000;
            section = 0;
            number = 0;
            any = true;
            continue;
        }
        return std::nullopt;  // non-numeral codepoint
    }
    if (!any) return std::nullopt;
    return total + section + number;
}

std::optional<long long> numeral_to_int(std::string_view run) {
    return numeral_to_int(codepoints(run));
}

}  // namespace courtsim::zh
