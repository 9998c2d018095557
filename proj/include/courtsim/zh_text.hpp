#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace courtsim::zh {

/// Decodes UTF-8 into codepoints. Invalid bytes decode as U+FFFD, one per byte.
std::vector<char32_t> codepoints(std::string_view text);

/// Encodes a single codepoint back to UTF-8.
std::string encode(char32_t cp);

/// Strips ASCII whitespace and U+3000 (ideographic space) from both ends.
std::string trim(std::string_view text);

bool is_ascii_digit(char32_t cp);
bool is_fullwidth_digit(char32_t cp);  // U+FF10..U+FF19

/// True for codepoints that can appear inside a numeral run:
/// Chinese digits/units, ASCII digits, fullwidth digits.
bool is_numeral(char32_t cp);

/// Converts a numeral run (Chinese numerals, ASCII or fullwidth digits,
/// optionally with ASCII thousands separators) to an integer.
/// Returns nullopt for runs that contain no numeral or overflow.
std::optional<long long> numeral_to_int(const std::vector<char32_t>& run);

/// Convenience overload over a UTF-8 string.
std::optional<long long> numeral_to_int(std::string_view run);

/// Scans codepoints starting at `pos` for a maximal numeral run.
/// Returns the run length (0 when cps[pos] is not a numeral). ASCII commas
/// are consumed only between two ASCII digits.
std::size_t numeral_run_length(const std::vector<char32_t>& cps, std::size_t pos);

}  // namespace courtsim::zh
