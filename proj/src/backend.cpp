#include "courtsim/backend.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/verdict.hpp"

namespace courtsim {

using ordered_json = nlohmann::ordered_json;

std::string RequestTag::key() const {
    return case_id + "|" + stage + "|" + role + "|" + std::to_string(turn);
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string request_digest(const CompletionRequest& request) {
    std::ostringstream canon;
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.4f", request.temperature);
    canon << temp << "\x1e" << request.max_tokens << "\x1e";
    for (const auto& m : request.messages) {
        canon << m.role_tag << "\x1f" << m.content << "\x1e";
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.str())));
    return buf;
}

namespace {

void validate_request(const CompletionRequest& request) {
    if (request.messages.empty()) {
        throw BackendFailure("completion request has no messages");
    }
    for (const auto& m : request.messages) {
        if ((m.role_tag == "user" || m.role_tag == "system") && m.content.empty()) {
            throw BackendFailure("empty " + m.role_tag + " message in request " +
                                 request.tag.key());
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> fixtures, bool strict,
                                 Fallback fallback)
    : fixtures_(std::move(fixtures)), strict_(strict), fallback_(std::move(fallback)) {}

std::map<std::string, std::string> ScriptedBackend::load_fixture_file(const std::string& path) {
    std::map<std::string, std::string> out;
    jsonl::for_each_record(path, [&](std::size_t lineno, const ordered_json& j) {
        RequestTag tag;
        try {
            tag.case_id = j.at("case_id").get<std::string>();
            tag.stage = j.at("stage").get<std::string>();
            tag.role = j.at("role").get<std::string>();
            tag.turn = j.at("turn").get<int>();
            const auto response = j.at("response").get<std::string>();
            if (!out.emplace(tag.key(), response).second) {
                throw MalformedRecord(path + ":" + std::to_string(lineno) +
                                      ": duplicate fixture key " + tag.key());
            }
        } catch (const MalformedRecord&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    validate_request(request);
    const auto it = fixtures_.find(request.tag.key());
    if (it != fixtures_.end()) {
        if (it->second.empty()) throw EmptyCompletion("fixture response empty: " + request.tag.key());
        return it->second;
    }
    if (strict_ || !fallback_) {
        throw ScriptMiss("no scripted response for tag " + request.tag.key());
    }
    const std::string text = fallback_(request);
    if (text.empty()) throw EmptyCompletion("fallback produced empty text: " + request.tag.key());
    return text;
}

ScriptedBackend::Fallback make_synthetic_responder() {
    return [](const CompletionRequest& request) -> std::string {
        const RequestTag& tag = request.tag;
        bool wants_verdict = false;
        for (const auto& m : request.messages) {
            if (m.content.find(kVerdictBegin) != std::string::npos) {
                wants_verdict = true;
                break;
            }
        }
        if (wants_verdict) {
            const std::uint64_t h = fnv1a64(tag.case_id);
            const long long months = 6 + static_cast<long long>(h % 36);
            const long long fine_units = static_cast<long long>((h >> 8) % 5);
            const bool probation = (h >> 16) % 3 == 0;
            Judgment j = make_judgment(
                ImprisonmentTerm::of_months(months), probation,
                probation ? std::optional<long long>(months + 12) : std::nullopt, fine_units > 0,
                fine_units > 0 ? std::optional<long long>(fine_units * 1000) : std::nullopt);
            j.cited_articles.push_back({"中华人民共和国刑法", 67});
            std::string doc = "经审理查明，本院对本案事实与证据予以确认。综合全案情节，依法作出如下判决。\n";
            doc += render_verdict_block(j);
            doc += "\n";
            return doc;
        }
        // Deterministic filler derived from the tag alone.
        return "[" + tag.role + "|" + tag.stage + "|t" + std::to_string(tag.turn) +
               "] 围绕本案的事实、证据与法律适用发表意见。";
    };
}

// ---------------------------------------------------------------------------
// CassetteBackend

CassetteBackend::CassetteBackend(std::shared_ptr<Backend> inner, std::string path,
                                 CassetteMode mode)
    : inner_(std::move(inner)), path_(std::move(path)), mode_(mode) {
    if (mode_ == CassetteMode::Replay) {
        jsonl::for_each_record(path_, [&](std::size_t lineno, const ordered_json& j) {
            try {
                entries_[j.at("digest").get<std::string>()] = j.at("response").get<std::string>();
            } catch (const std::exception& e) {
                throw MalformedRecord(path_ + ":" + std::to_string(lineno) + ": " + e.what());
            }
        });
    } else {
        if (!inner_) throw ConfigError("cassette record mode requires an inner backend");
        std::ofstream touch(path_, std::ios::binary | std::ios::app);
        if (!touch) throw ConfigError("cannot open cassette for writing: " + path_);
    }
}

std::string CassetteBackend::complete(const CompletionRequest& request) {
    validate_request(request);
    const std::string digest = request_digest(request);
    if (mode_ == CassetteMode::Replay) {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(digest);
        if (it == entries_.end()) {
            throw CassetteMiss("no cassette entry for digest " + digest + " (tag " +
                               request.tag.key() + ")");
        }
        return it->second;
    }
    const std::string response = inner_->complete(request);
    {
        std::lock_guard lock(mutex_);
        if (!entries_.count(digest)) {
            entries_[digest] = response;
            ordered_json j;
            j["digest"] = digest;
            j["tag"] = request.tag.key();
            j["response"] = response;
            std::ofstream out(path_, std::ios::binary | std::ios::app);
            out << j.dump() << "\n";
        }
    }
    return response;
}

std::string CassetteBackend::name() const {
    return mode_ == CassetteMode::Replay ? "replay" : "record";
}

std::size_t CassetteBackend::entry_count() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

}  // namespace courtsim
