// End-to-end eval through the live HTTP client against a local
// OpenAI-compatible stub: the same flow the live smoke check runs against a
// real endpoint.

#include "secot/eval.hpp"
#include "secot/http_provider.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

using namespace secot;

namespace {

// Answers deterministically from the request content so repeated runs (and
// the cache) see stable completions.
std::string stub_answer(const std::string& content) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : content) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    const char letter = static_cast<char>('A' + h % 3);
    return std::string("Considering the options, the answer is (") + letter + ").";
}

struct StubServer {
    httplib::Server server;
    std::thread thread;
    std::atomic<int> requests{0};
    int port = 0;

    StubServer() {
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        requests.fetch_add(1);
                        const auto body = nlohmann::json::parse(req.body);
                        const std::string content =
                            body["messages"][0]["content"].get<std::string>();
                        nlohmann::json payload = {
                            {"choices",
                             {{{"message",
                                {{"role", "assistant"},
                                 {"content", stub_answer(content)}}}}}},
                            {"usage",
                             {{"prompt_tokens", 12}, {"completion_tokens", 9}}},
                        };
                        res.set_content(payload.dump(), "application/json");
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }
};

std::vector<Question> choice_questions(int n) {
    std::vector<Question> questions;
    for (int i = 0; i < n; ++i) {
        Question q;
        q.id = "s" + std::to_string(i);
        q.text = "Stub question " + std::to_string(i) + "?";
        q.choices = {"first", "second", "third"};
        q.format = AnswerFormat::multiple_choice("ABC");
        q.gold = {"A", AnswerFormat::Kind::MultipleChoice, std::nullopt};
        questions.push_back(std::move(q));
    }
    return questions;
}

} // namespace

TEST_CASE("eval runs end-to-end over HTTP with caching and emits a report") {
    StubServer stub;

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(stub.port);
    config.requests_per_minute = 0;
    auto live = std::make_shared<HttpProvider>(config);
    const auto cache_dir = testing::scratch_dir("http-eval");
    auto provider = std::make_shared<CachingProvider>(live, cache_dir);

    RunConfig run;
    run.method = Method::Ari;
    run.model = "stub-model";
    run.parallelism = 4;
    run.limit = 20;

    const auto questions = choice_questions(25);
    const auto report = run_eval(*provider, questions, run, "stub");
    CHECK(report.total == 20);
    CHECK(report.total_calls > 0);
    for (const auto& record : report.records) CHECK_FALSE(record.failed);
    CHECK_FALSE(report.entropy_bins.empty());

    const auto out = testing::scratch_dir("http-eval-out");
    emit_report(report, out);
    CHECK(std::filesystem::exists(out / "entropy_accuracy.csv"));

    // a replay pass over the same cache needs no live traffic and matches
    const int live_requests = stub.requests.load();
    CachingProvider replay(nullptr, cache_dir, /*replay_only=*/true);
    const auto replayed = run_eval(replay, questions, run, "stub");
    CHECK(stub.requests.load() == live_requests);
    CHECK(report_to_json(replayed) == report_to_json(report));

    std::filesystem::remove_all(cache_dir);
    std::filesystem::remove_all(out);
}

TEST_CASE("empty completion content is recorded, not synthesized over") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        nlohmann::json payload = {
            {"choices", {{{"message", {{"role", "assistant"}, {"content", ""}}}}}},
        };
        res.set_content(payload.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.requests_per_minute = 0;
    HttpProvider provider(config);
    ChatRequest request;
    request.messages.push_back({Role::User, "?"});
    const auto completion = provider.complete(request);
    CHECK(completion.text.empty());
    CHECK(completion.origin == CompletionOrigin::Live);

    server.stop();
    thread.join();
}
