#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "courtsim/backend.hpp"
#include "courtsim/errors.hpp"

namespace courtsim {

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

void RemoteBackend::rate_limit_wait() {
    if (config_.min_request_interval_ms <= 0) return;
    std::chrono::steady_clock::time_point wake;
    {
        std::lock_guard lock(limiter_mutex_);
        const auto now = std::chrono::steady_clock::now();
        const auto interval = std::chrono::milliseconds(config_.min_request_interval_ms);
        const auto earliest = last_request_ + interval;
        wake = earliest > now ? earliest : now;
        last_request_ = wake;
    }
    std::this_thread::sleep_until(wake);
}

std::string RemoteBackend::complete(const CompletionRequest& request) {
    if (request.messages.empty()) throw BackendFailure("completion request has no messages");

    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw AuthMissing("API key env var not set: " + config_.api_key_env);
    }

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", m.role_tag}, {"content", m.content}});
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(config_.backoff_base_ms) * (1LL << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        rate_limit_wait();

        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
        client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
        httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

        auto res = client.Post(config_.completion_path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;  // connect/timeout errors are transient
        }
        if (res->status == 200) {
            try {
                const auto j = nlohmann::json::parse(res->body);
                const auto content =
                    j.at("choices").at(0).at("message").at("content").get<std::string>();
                if (content.empty()) {
                    throw EmptyCompletion("remote returned empty content for tag " +
                                          request.tag.key());
                }
                return content;
            } catch (const EmptyCompletion&) {
                throw;
            } catch (const std::exception& e) {
                throw BackendFailure(std::string("malformed completion response: ") + e.what());
            }
        }
        if (res->status == 400 || res->status == 401 || res->status == 403) {
            // non-transient; never retried
            if (res->status == 401) throw AuthMissing("HTTP 401 from completion endpoint");
            throw BackendFailure("HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        throw BackendFailure("unexpected HTTP status " + std::to_string(res->status));
    }
    throw RemoteExhausted("retry budget exhausted after " +
                          std::to_string(config_.max_retries + 1) + " attempts; last: " +
                          last_error);
}

}  // namespace courtsim
