#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace courtsim {

// ---------------------------------------------------------------------------
// Requests

struct ChatMessage {
    std::string role_tag;  // system | user | assistant
    std::string content;
};

/// Identifies a generation call for scripting and tracing. Stage/role are
/// carried as strings so non-trial calls (e.g. ingestion) can tag themselves.
struct RequestTag {
    std::string case_id;
    std::string stage;
    std::string role;
    int turn = 0;

    std::string key() const;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 1024;
    RequestTag tag;
};

/// Stable digest of a request's semantic content (messages + sampling
/// parameters); the cassette key.
std::string request_digest(const CompletionRequest& request);

std::uint64_t fnv1a64(std::string_view data);

// ---------------------------------------------------------------------------
// Backend interface

class Backend {
public:
    virtual ~Backend() = default;
    /// Returns the completion text. Must be safe under concurrent calls.
    /// Throws BackendFailure/ScriptMiss/CassetteMiss/RemoteExhausted/
    /// AuthMissing per implementation; EmptyCompletion when the produced
    /// text is empty.
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend (fixtures + deterministic fallback)

class ScriptedBackend : public Backend {
public:
    using Fallback = std::function<std::string(const CompletionRequest&)>;

    /// strict=true raises ScriptMiss on unknown tags; otherwise the fallback
    /// synthesizes a response (ScriptMiss when no fallback is installed).
    ScriptedBackend(std::map<std::string, std::string> fixtures, bool strict,
                    Fallback fallback = {});

    /// Fixture file: JSONL records {case_id, stage, role, turn, response}.
    static std::map<std::string, std::string> load_fixture_file(const std::string& path);

    std::string complete(const CompletionRequest& request) override;
    std::string name() const override { return "scripted"; }

private:
    std::map<std::string, std::string> fixtures_;
    bool strict_;
    Fallback fallback_;
};

/// Deterministic responder used by the bundled `scripted` backend: output is
/// a pure function of the request tag, and requests whose prompt asks for a
/// verdict block receive a well-formed block derived from the case id.
ScriptedBackend::Fallback make_synthetic_responder();

// ---------------------------------------------------------------------------
// Record/replay cassette

enum class CassetteMode { Record, Replay };

/// Cassette file: JSONL records {digest, tag, response}. Record mode wraps an
/// inner backend and persists every completion; replay mode serves persisted
/// responses and never invokes a backend. Throws CassetteMiss in replay mode
/// for unknown digests.
class CassetteBackend : public Backend {
public:
    CassetteBackend(std::shared_ptr<Backend> inner, std::string path, CassetteMode mode);

    std::string complete(const CompletionRequest& request) override;
    std::string name() const override;
    std::size_t entry_count() const;

private:
    std::shared_ptr<Backend> inner_;
    std::string path_;
    CassetteMode mode_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

// ---------------------------------------------------------------------------
// Remote backend (OpenAI-compatible chat completions)

struct RemoteConfig {
    std::string endpoint = "http://127.0.0.1:8080";  // scheme://host[:port]
    std::string completion_path = "/v1/chat/completions";
    std::string model = "deepseek-chat";
    std::string api_key_env = "COURTSIM_API_KEY";
    int timeout_ms = 60000;
    int max_retries = 3;        // additional attempts after the first
    int backoff_base_ms = 200;  // doubles per retry
    int min_request_interval_ms = 0;
};

class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);

    /// Retries transient failures (connect errors, timeouts, HTTP 429/5xx)
    /// with exponential backoff; never retries 400/401/403. Throws
    /// AuthMissing when the key env var is unset, RemoteExhausted when the
    /// retry budget is spent.
    std::string complete(const CompletionRequest& request) override;
    std::string name() const override { return "remote"; }

private:
    void rate_limit_wait();

    RemoteConfig config_;
    std::mutex limiter_mutex_;
    std::chrono::steady_clock::time_point last_request_{};
};

}  // namespace courtsim
