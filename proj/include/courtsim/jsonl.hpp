#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

namespace courtsim::jsonl {

using ordered_json = nlohmann::ordered_json;

/// Calls `fn(line_number, record)` for each non-empty line of a JSONL file.
/// Throws MalformedRecord naming the line on JSON errors; propagates
/// exceptions from `fn`.
void for_each_record(const std::string& path,
                     const std::function<void(std::size_t, const ordered_json&)>& fn);

/// Reads a whole file into a string; throws MalformedRecord when unreadable.
std::string slurp(const std::string& path);

/// Writes content atomically enough for our purposes (single write + close).
void spit(const std::string& path, const std::string& content);

}  // namespace courtsim::jsonl
