#include "secot/provider.hpp"

#include "secot/http_provider.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <thread>

using namespace secot;

namespace {

ChatRequest simple_request(const std::string& content, double temperature = 0.7,
                           int sample_index = 0) {
    ChatRequest request;
    request.messages.push_back({Role::User, content});
    request.temperature = temperature;
    request.sample_index = sample_index;
    return request;
}

} // namespace

TEST_CASE("scripted provider returns mapped responses") {
    Script script;
    const auto request = simple_request("what is 6 * 6?");
    script.add(request, "The answer is 36.");
    ScriptedProvider provider(std::move(script));

    const auto completion = provider.complete(request);
    CHECK(completion.text == "The answer is 36.");
    CHECK(completion.origin == CompletionOrigin::Scripted);
    CHECK(provider.call_count() == 1);
}

TEST_CASE("script misses raise unless a default policy exists") {
    Script script;
    script.add(simple_request("known"), "ok");
    ScriptedProvider strict(script);
    CHECK_THROWS_AS((void)strict.complete(simple_request("unknown")), ScriptMiss);

    script.set_default_text("fallback");
    ScriptedProvider relaxed(std::move(script));
    CHECK(relaxed.complete(simple_request("unknown")).text == "fallback");
}

TEST_CASE("sample_n draws indices 0..n-1 in order") {
    Script script;
    for (int i = 0; i < 3; ++i) {
        script.add(simple_request("q", 0.7, i), "path " + std::to_string(i));
    }
    ScriptedProvider provider(std::move(script));
    const auto batch = provider.sample_n(simple_request("q", 0.7), 3);
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].text == "path 0");
    CHECK(batch[1].text == "path 1");
    CHECK(batch[2].text == "path 2");

    // n = 1 behaves like a single completion
    const auto single = provider.sample_n(simple_request("q", 0.7), 1);
    CHECK(single[0].text == "path 0");
}

TEST_CASE("identical request streams give identical completion streams") {
    Script script;
    for (int i = 0; i < 4; ++i) {
        script.add(simple_request("stable", 0.7, i), "text-" + std::to_string(i * i));
    }
    ScriptedProvider provider_a(script);
    ScriptedProvider provider_b(script);
    for (int i = 0; i < 4; ++i) {
        const auto request = simple_request("stable", 0.7, i);
        CHECK(provider_a.complete(request).text == provider_b.complete(request).text);
    }
}

TEST_CASE("fingerprints cover every key component") {
    const auto base = simple_request("content", 0.7, 0);
    auto changed_message = base;
    changed_message.messages[0].content = "different";
    auto changed_temperature = base;
    changed_temperature.temperature = 0.6;
    auto changed_index = base;
    changed_index.sample_index = 1;
    auto changed_role = base;
    changed_role.messages[0].role = Role::System;

    CHECK(script_fingerprint(base) != script_fingerprint(changed_message));
    CHECK(script_fingerprint(base) != script_fingerprint(changed_temperature));
    CHECK(script_fingerprint(base) != script_fingerprint(changed_index));
    CHECK(script_fingerprint(base) != script_fingerprint(changed_role));

    // the cache key additionally separates models
    auto changed_model = base;
    changed_model.model = "other-model";
    CHECK(script_fingerprint(base) == script_fingerprint(changed_model));
    CHECK(cache_key(base) != cache_key(changed_model));
}

TEST_CASE("script files round-trip through JSONL") {
    const auto dir = testing::scratch_dir("script");
    const auto path = dir / "script.jsonl";
    {
        std::ofstream out(path);
        out << R"({"messages":[{"role":"user","content":"hi"}],"temperature":0.7,)"
            << R"("sample_index":0,"response":"hello"})" << "\n";
        out << R"({"default_response":"dunno"})" << "\n";
    }
    ScriptedProvider provider(Script::load_jsonl(path));
    CHECK(provider.complete(simple_request("hi")).text == "hello");
    CHECK(provider.complete(simple_request("bye")).text == "dunno");
    std::filesystem::remove_all(dir);
}

TEST_CASE("cache wrapper serves repeats from disk") {
    const auto dir = testing::scratch_dir("cache");
    Script script;
    script.add(simple_request("q1"), "r1");
    auto scripted = std::make_shared<ScriptedProvider>(std::move(script));
    CachingProvider cached(scripted, dir);

    const auto first = cached.complete(simple_request("q1"));
    CHECK(first.origin == CompletionOrigin::Scripted);
    const auto second = cached.complete(simple_request("q1"));
    CHECK(second.origin == CompletionOrigin::Cache);
    CHECK(second.text == "r1");
    CHECK(cached.live_calls() == 1);
    CHECK(scripted->call_count() == 1);
    CHECK(cached.cache_hits() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sample_n through the cache issues each draw live exactly once") {
    const auto dir = testing::scratch_dir("cache-n");
    Script script;
    for (int i = 0; i < 3; ++i) script.add(simple_request("q", 0.7, i), std::to_string(i));
    auto scripted = std::make_shared<ScriptedProvider>(std::move(script));
    CachingProvider cached(scripted, dir);

    (void)cached.sample_n(simple_request("q", 0.7), 3);
    const auto again = cached.sample_n(simple_request("q", 0.7), 3);
    CHECK(scripted->call_count() == 3); // 3 live calls total across both rounds
    for (const auto& completion : again) {
        CHECK(completion.origin == CompletionOrigin::Cache);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("replay mode fails on a cache miss") {
    const auto dir = testing::scratch_dir("replay");
    CachingProvider replay(nullptr, dir, /*replay_only=*/true);
    CHECK_THROWS_AS((void)replay.complete(simple_request("missing")), ProviderError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent identical requests deduplicate to one live call") {
    const auto dir = testing::scratch_dir("dedup");

    struct SlowProvider : Provider {
        std::atomic<int> calls{0};
        Completion complete(const ChatRequest&) override {
            calls.fetch_add(1);
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            return {"slow", CompletionOrigin::Live, 0, 0, 0};
        }
    };
    auto slow = std::make_shared<SlowProvider>();
    CachingProvider cached(slow, dir);

    std::vector<std::thread> threads;
    std::atomic<int> successes{0};
    for (int i = 0; i < 4; ++i) {
        threads.emplace_back([&] {
            const auto completion = cached.complete(simple_request("same"));
            if (completion.text == "slow") successes.fetch_add(1);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(successes.load() == 4);
    CHECK(slow->calls.load() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("script entries can be keyed by precomputed fingerprints") {
    const auto request = simple_request("keyed", 0.3, 2);
    Script script;
    script.add_fingerprint(script_fingerprint(request), "by-key");
    ScriptedProvider provider(std::move(script));
    CHECK(provider.complete(request).text == "by-key");
}

TEST_CASE("sample_n reports the index of a failing draw") {
    Script script;
    script.add(simple_request("q", 0.7, 0), "ok");
    ScriptedProvider provider(std::move(script)); // index 1 misses
    try {
        (void)provider.sample_n(simple_request("q", 0.7), 3);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(std::string(e.what()).find("draw 1") != std::string::npos);
    }
}

TEST_CASE("deduplicated waiters see the owner's failure") {
    const auto dir = testing::scratch_dir("dedup-err");

    struct FailingProvider : Provider {
        std::atomic<int> calls{0};
        Completion complete(const ChatRequest&) override {
            calls.fetch_add(1);
            std::this_thread::sleep_for(std::chrono::milliseconds(30));
            throw ProviderError(503, "overloaded", "stub failure");
        }
    };
    auto failing = std::make_shared<FailingProvider>();
    CachingProvider cached(failing, dir);

    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
        threads.emplace_back([&] {
            try {
                (void)cached.complete(simple_request("same"));
            } catch (const Error&) {
                failures.fetch_add(1);
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(failures.load() == 4);
    // a failed request is not poisoned: the next attempt reaches the inner
    // provider again
    CHECK_THROWS_AS((void)cached.complete(simple_request("same")), Error);
    CHECK(failing->calls.load() >= 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("live provider retries 429 then succeeds, passing content through bit-exact") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_content;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                            httplib::Response& res) {
        const int n = hits.fetch_add(1);
        if (n == 0) {
            res.status = 429;
            res.set_content("{\"error\":\"rate limited\"}", "application/json");
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        seen_content = body["messages"][0]["content"].get<std::string>();
        nlohmann::json payload = {
            {"choices",
             {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}},
            {"usage", {{"prompt_tokens", 5}, {"completion_tokens", 2}}},
        };
        res.set_content(payload.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.max_attempts = 3;
    config.backoff_initial_ms = 10;
    config.requests_per_minute = 0; // no limiter in tests
    HttpProvider provider(config);

    const std::string content = "exact \"bytes\"\nwith newline\tand tab";
    const auto completion = provider.complete(simple_request(content));
    CHECK(completion.text == "pong");
    CHECK(completion.origin == CompletionOrigin::Live);
    CHECK(completion.prompt_tokens == 5);
    CHECK(hits.load() == 2); // one retry
    CHECK(seen_content == content);

    server.stop();
    server_thread.join();
}

TEST_CASE("live provider surfaces non-retryable errors") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("{\"error\":\"bad request\"}", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.max_attempts = 2;
    config.backoff_initial_ms = 5;
    config.requests_per_minute = 0;
    HttpProvider provider(config);

    try {
        (void)provider.complete(simple_request("x"));
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.status() == 400);
        CHECK(e.body().find("bad request") != std::string::npos);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("request validation rejects malformed requests") {
    ChatRequest empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

    ChatRequest assistant_first;
    assistant_first.messages.push_back({Role::Assistant, "hi"});
    CHECK_THROWS_AS(assistant_first.validate(), std::invalid_argument);

    auto bad_temperature = simple_request("x");
    bad_temperature.temperature = 2.5;
    CHECK_THROWS_AS(bad_temperature.validate(), std::invalid_argument);
}
