#include "courtsim/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "courtsim/errors.hpp"

namespace courtsim::jsonl {

void for_each_record(const std::string& path,
                     const std::function<void(std::size_t, const ordered_json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord("cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        fn(lineno, j);
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("short write: " + path);
}

}  // namespace courtsim::jsonl
