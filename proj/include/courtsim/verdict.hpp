#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "courtsim/domain.hpp"

namespace courtsim {

/// Machine-readable trailer appended to judgment documents:
///
///   ===VERDICT===
///   IMPRISONMENT: <months|无期徒刑|死刑|无>
///   PROBATION: <months|无>
///   FINE: <yuan|无>
///   ARTICLES: <comma-separated 法名:条号, or 无>
///   ===END===
///
/// The format is byte-exact; see docs in the repository README.
inline constexpr std::string_view kVerdictBegin = "===VERDICT===";
inline constexpr std::string_view kVerdictEnd = "===END===";

std::string render_verdict_block(const Judgment& judgment);

/// Parses the first verdict block found in `document`. Returns nullopt when
/// no block is present. Throws VerdictParseFailure when a block exists but
/// the IMPRISONMENT line is missing or unparseable. A probation length
/// implies applicability (normalization, warning goes to the log callback
/// when provided).
std::optional<Judgment> parse_verdict_block(const std::string& document,
                                            std::string* warning = nullptr);

}  // namespace courtsim
