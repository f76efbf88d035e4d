#include "secot/http_provider.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace secot {

namespace {

using nlohmann::json;

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

std::string request_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    json body = {
        {"model", request.model},
        {"messages", messages},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"n", 1},
    };
    return body.dump();
}

} // namespace

HttpProviderConfig HttpProviderConfig::from_env() { return from_env(HttpProviderConfig{}); }

HttpProviderConfig HttpProviderConfig::from_env(HttpProviderConfig base) {
    if (base.base_url.empty()) {
        if (const char* url = std::getenv("OPENAI_BASE_URL")) base.base_url = url;
    }
    if (base.api_key.empty()) {
        if (const char* key = std::getenv("OPENAI_API_KEY")) base.api_key = key;
    }
    return base;
}

HttpProvider::HttpProvider(HttpProviderConfig config)
    : config_(std::move(config)),
      bucket_tokens_(config_.requests_per_minute),
      bucket_refill_(std::chrono::steady_clock::now()) {
    if (config_.base_url.empty()) {
        throw std::invalid_argument("HttpProvider: base_url not configured "
                                    "(set OPENAI_BASE_URL or provide it explicitly)");
    }
}

void HttpProvider::rate_limit() {
    if (config_.requests_per_minute <= 0) return;
    while (true) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard<std::mutex> lock(bucket_mutex_);
            const auto now = std::chrono::steady_clock::now();
            const double refill =
                std::chrono::duration<double>(now - bucket_refill_).count() *
                config_.requests_per_minute / 60.0;
            bucket_tokens_ = std::min<double>(config_.requests_per_minute,
                                              bucket_tokens_ + refill);
            bucket_refill_ = now;
            if (bucket_tokens_ >= 1.0) {
                bucket_tokens_ -= 1.0;
                return;
            }
            const double deficit = 1.0 - bucket_tokens_;
            wait = std::chrono::milliseconds(
                static_cast<long>(deficit * 60000.0 / config_.requests_per_minute) + 1);
        }
        std::this_thread::sleep_for(wait);
    }
}

Completion HttpProvider::complete(const ChatRequest& request) {
    request.validate();
    const std::string body = request_body(request);

    int last_status = 0;
    std::string last_body;
    long backoff_ms = config_.backoff_initial_ms;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = static_cast<long>(backoff_ms * config_.backoff_factor);
        }
        rate_limit();

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }

        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();

        if (!res) {
            last_status = 0;
            last_body = httplib::to_string(res.error());
            continue; // transport failure, retry
        }
        last_status = res->status;
        last_body = res->body;
        if (retryable_status(res->status)) continue;
        if (res->status != 200) {
            throw ProviderError(res->status, res->body,
                                "chat completion failed with HTTP " +
                                    std::to_string(res->status));
        }

        json payload;
        try {
            payload = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderError(res->status, res->body,
                                std::string("malformed completion payload: ") + e.what());
        }
        Completion completion;
        completion.origin = CompletionOrigin::Live;
        completion.latency_ms = elapsed;
        const auto& choices = payload.at("choices");
        if (choices.empty()) {
            throw ProviderError(res->status, res->body, "completion payload has no choices");
        }
        const auto& message = choices.at(0).at("message");
        // Empty content is recorded as-is, never synthesized over.
        completion.text = message.value("content", std::string{});
        if (payload.contains("usage")) {
            completion.prompt_tokens = payload["usage"].value("prompt_tokens", 0);
            completion.completion_tokens = payload["usage"].value("completion_tokens", 0);
        }
        return completion;
    }
    throw ProviderError(last_status, last_body,
                        "chat completion failed after " +
                            std::to_string(config_.max_attempts) + " attempts (last status " +
                            std::to_string(last_status) + ")");
}

} // namespace secot
