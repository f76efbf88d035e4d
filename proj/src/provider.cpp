#include "secot/provider.hpp"

#include "secot/answers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>

namespace secot {

namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::string_view data) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
}

std::string to_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string fingerprint_core(const ChatRequest& request, bool include_model) {
    std::string blob;
    if (include_model) {
        blob += request.model;
        blob += '\x1e';
    }
    for (const auto& message : request.messages) {
        blob += to_string(message.role);
        blob += '\x1f';
        blob += message.content;
        blob += '\x1e';
    }
    blob += "temp=";
    blob += canonical_number_text(request.temperature);
    blob += '\x1e';
    blob += "i=";
    blob += std::to_string(request.sample_index);
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, blob);
    return to_hex(h);
}

} // namespace

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> role_from_string(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    return std::nullopt;
}

void ChatRequest::validate() const {
    if (messages.empty()) throw std::invalid_argument("ChatRequest: messages must be non-empty");
    const Role first = messages.front().role;
    if (first != Role::System && first != Role::User) {
        throw std::invalid_argument("ChatRequest: first message must be system or user");
    }
    if (temperature < 0.0 || temperature > 2.0) {
        throw std::invalid_argument("ChatRequest: temperature outside [0, 2]");
    }
}

std::string script_fingerprint(const ChatRequest& request) {
    return fingerprint_core(request, /*include_model=*/false);
}

std::string cache_key(const ChatRequest& request) {
    return fingerprint_core(request, /*include_model=*/true);
}

std::vector<Completion> Provider::sample_n(const ChatRequest& request, int n) {
    if (n < 1) throw std::invalid_argument("sample_n: n must be >= 1");
    std::vector<Completion> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        ChatRequest draw = request;
        draw.sample_index = i;
        try {
            out.push_back(complete(draw));
        } catch (const Error& e) {
            throw ProviderError(0, "", "sample_n: draw " + std::to_string(i) +
                                           " failed: " + e.what());
        }
    }
    return out;
}

void Script::add(const ChatRequest& request, std::string response) {
    entries_[script_fingerprint(request)] = std::move(response);
}

void Script::add_fingerprint(std::string fingerprint, std::string response) {
    entries_[std::move(fingerprint)] = std::move(response);
}

void Script::set_default(std::function<std::string(const ChatRequest&)> policy) {
    default_policy_ = std::move(policy);
}

void Script::set_default_text(std::string text) {
    default_policy_ = [text = std::move(text)](const ChatRequest&) { return text; };
}

std::optional<std::string> Script::lookup(const ChatRequest& request) const {
    const auto it = entries_.find(script_fingerprint(request));
    if (it != entries_.end()) return it->second;
    if (default_policy_) return default_policy_(request);
    return std::nullopt;
}

Script Script::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("script file not found: " + path.string());
    Script script;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json entry;
        try {
            entry = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(lineno, "script line " + std::to_string(lineno) + ": " + e.what());
        }
        if (entry.contains("default_response")) {
            script.set_default_text(entry.at("default_response").get<std::string>());
            continue;
        }
        const std::string response = entry.at("response").get<std::string>();
        if (entry.contains("fingerprint")) {
            script.add_fingerprint(entry.at("fingerprint").get<std::string>(), response);
            continue;
        }
        ChatRequest request;
        for (const auto& m : entry.at("messages")) {
            const auto role = role_from_string(m.at("role").get<std::string>());
            if (!role) throw ParseError(lineno, "unknown role in script line");
            request.messages.push_back({*role, m.at("content").get<std::string>()});
        }
        request.temperature = entry.value("temperature", 0.0);
        request.sample_index = entry.value("sample_index", 0);
        script.add(request, response);
    }
    return script;
}

Completion ScriptedProvider::complete(const ChatRequest& request) {
    request.validate();
    calls_.fetch_add(1);
    auto text = script_.lookup(request);
    if (!text) {
        throw ScriptMiss("no scripted response for fingerprint " +
                         script_fingerprint(request));
    }
    Completion completion;
    completion.text = std::move(*text);
    completion.origin = CompletionOrigin::Scripted;
    return completion;
}

CachingProvider::CachingProvider(std::shared_ptr<Provider> inner, std::filesystem::path dir,
                                 bool replay_only)
    : inner_(std::move(inner)), dir_(std::move(dir)), replay_only_(replay_only) {
    std::filesystem::create_directories(dir_);
}

std::optional<std::string> CachingProvider::read_entry(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json entry = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (entry.is_discarded() || !entry.contains("response")) return std::nullopt;
    return entry.at("response").get<std::string>();
}

void CachingProvider::write_entry(const std::string& key, const ChatRequest& request,
                                  const std::string& text) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    json entry = {
        {"model", request.model},
        {"messages", messages},
        {"temperature", request.temperature},
        {"sample_index", request.sample_index},
        {"response", text},
    };
    const auto path = dir_ / (key + ".json");
    const auto tmp = dir_ / (key + ".json.tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write cache entry: " + tmp.string());
        out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

Completion CachingProvider::complete(const ChatRequest& request) {
    const std::string key = cache_key(request);

    std::shared_future<std::string> pending;
    std::promise<std::string> mine;
    bool owner = false;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (auto cached = read_entry(key)) {
            cache_hits_.fetch_add(1);
            Completion completion;
            completion.text = std::move(*cached);
            completion.origin = CompletionOrigin::Cache;
            return completion;
        }
        const auto it = in_flight_.find(key);
        if (it != in_flight_.end()) {
            pending = it->second;
        } else {
            pending = mine.get_future().share();
            in_flight_.emplace(key, pending);
            owner = true;
        }
    }

    if (!owner) {
        Completion completion;
        completion.text = pending.get(); // rethrows the owner's error
        completion.origin = CompletionOrigin::Cache;
        cache_hits_.fetch_add(1);
        return completion;
    }

    Completion completion;
    try {
        if (replay_only_) {
            throw ProviderError(0, "", "replay cache miss for key " + key);
        }
        completion = inner_->complete(request);
        live_calls_.fetch_add(1);
        write_entry(key, request, completion.text);
    } catch (...) {
        mine.set_exception(std::current_exception());
        std::lock_guard<std::mutex> lock(mutex_);
        in_flight_.erase(key);
        throw;
    }
    mine.set_value(completion.text);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        in_flight_.erase(key);
    }
    return completion;
}

} // namespace secot
