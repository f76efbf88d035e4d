#pragma once

#include "secot/provider.hpp"

#include <chrono>
#include <mutex>
#include <string>

namespace secot {

struct HttpProviderConfig {
    std::string base_url;  // e.g. "https://api.openai.com"
    std::string api_key;
    int max_attempts = 5;          // total tries per request
    int backoff_initial_ms = 500;  // doubled per retry
    double backoff_factor = 2.0;
    int requests_per_minute = 60;  // token bucket; <= 0 disables limiting
    int timeout_seconds = 120;

    /// Reads OPENAI_BASE_URL / OPENAI_API_KEY when fields are empty.
    static HttpProviderConfig from_env();
    static HttpProviderConfig from_env(HttpProviderConfig base);
};

/// Live client for OpenAI-compatible POST /v1/chat/completions endpoints.
/// Retries 429/5xx and transport failures with exponential backoff; message
/// content passes through bit-exact.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    Completion complete(const ChatRequest& request) override;

private:
    void rate_limit();

    HttpProviderConfig config_;
    std::mutex bucket_mutex_;
    double bucket_tokens_;
    std::chrono::steady_clock::time_point bucket_refill_;
};

} // namespace secot
