#pragma once

#include "secot/errors.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace secot {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model = "gpt-3.5-turbo";
    std::vector<ChatMessage> messages;
    double temperature = 0.0;     // [0, 2]
    int max_tokens = 1024;
    int sample_index = 0;         // distinguishes repeated draws

    void validate() const;
};

enum class CompletionOrigin { Live, Scripted, Cache };

struct Completion {
    std::string text;
    CompletionOrigin origin = CompletionOrigin::Live;
    long latency_ms = 0;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

/// Stable fingerprint over messages + temperature + sample index (script
/// lookups). The cache key additionally covers the model id.
std::string script_fingerprint(const ChatRequest& request);
std::string cache_key(const ChatRequest& request);

class Provider {
public:
    virtual ~Provider() = default;

    virtual Completion complete(const ChatRequest& request) = 0;

    /// n completions with sample indices 0..n-1, order preserved. A failure
    /// aborts with the failing index in the error message.
    std::vector<Completion> sample_n(const ChatRequest& request, int n);
};

/// Fingerprint -> response mapping with an optional default policy.
class Script {
public:
    void add(const ChatRequest& request, std::string response);
    void add_fingerprint(std::string fingerprint, std::string response);
    void set_default(std::function<std::string(const ChatRequest&)> policy);
    void set_default_text(std::string text);

    std::optional<std::string> lookup(const ChatRequest& request) const;
    std::size_t size() const { return entries_.size(); }

    static Script load_jsonl(const std::filesystem::path& path);

private:
    std::map<std::string, std::string> entries_;
    std::function<std::string(const ChatRequest&)> default_policy_;
};

class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(Script script) : script_(std::move(script)) {}

    Completion complete(const ChatRequest& request) override;

    long call_count() const { return calls_.load(); }

private:
    Script script_;
    std::atomic<long> calls_{0};
};

/// Content-addressed on-disk cache around any provider. One JSON file per
/// key; concurrent identical requests are deduplicated so only one reaches
/// the inner provider. In replay mode a miss is an error instead of a live
/// call.
class CachingProvider : public Provider {
public:
    CachingProvider(std::shared_ptr<Provider> inner, std::filesystem::path dir,
                    bool replay_only = false);

    Completion complete(const ChatRequest& request) override;

    long live_calls() const { return live_calls_.load(); }
    long cache_hits() const { return cache_hits_.load(); }

private:
    std::optional<std::string> read_entry(const std::string& key) const;
    void write_entry(const std::string& key, const ChatRequest& request,
                     const std::string& text) const;

    std::shared_ptr<Provider> inner_;
    std::filesystem::path dir_;
    bool replay_only_;
    std::atomic<long> live_calls_{0};
    std::atomic<long> cache_hits_{0};
    std::mutex mutex_;
    std::map<std::string, std::shared_future<std::string>> in_flight_;
};

} // namespace secot
