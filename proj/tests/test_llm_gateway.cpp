#include <doctest.h>

#include <chrono>

#include "kgqa/errors.hpp"
#include "kgqa/llm_gateway.hpp"
#include "stub_server.hpp"

using namespace kgqa;
using namespace std::chrono_literals;

namespace {

std::vector<ChatTurn> user(std::string text) { return {ChatTurn{Role::user, std::move(text)}}; }

/// Throws `failures` gateway errors, then answers "ok". Records call times.
class Flaky final : public ChatBackend {
public:
    Flaky(int failures, bool retryable = true) : failures_(failures), retryable_(retryable) {}
    std::string name() const override { return "flaky"; }
    int calls = 0;
    std::vector<std::chrono::steady_clock::time_point> times;

protected:
    std::string do_complete(std::span<const ChatTurn>, const GenerationParams&) override {
        ++calls;
        times.push_back(std::chrono::steady_clock::now());
        if (failures_ < 0 || calls <= failures_) throw GatewayError("flaky", "boom", retryable_);
        return "ok";
    }

private:
    int failures_;
    bool retryable_;
};

}  // namespace

TEST_CASE("scripted backend replays in order and checks matches") {
    ScriptedBackend b({{std::string("Plan 1"), "Plan 1: ..."}, {std::nullopt, "second"}});
    CHECK(b.complete(user("... Plan 1:"), {}) == "Plan 1: ...");
    CHECK(b.complete(user("anything"), {}) == "second");
    CHECK(b.remaining() == 0);
    CHECK_THROWS_AS(b.complete(user("more"), {}), ScriptError);

    ScriptedBackend strict({{std::string("Thought 2:"), "x"}});
    CHECK_THROWS_AS(strict.complete(user("Plan 2:"), {}), ScriptError);
}

TEST_CASE("scripted backend is deterministic") {
    const auto doc = nlohmann::json::parse(R"([{"reply": "a"}, {"match": "q", "reply": "b"}, {"match": null, "reply": "c"}])");
    std::vector<std::string> first, second;
    for (auto* out : {&first, &second}) {
        ScriptedBackend b(ScriptedBackend::parse_script(doc));
        for (int i = 0; i < 3; ++i) out->push_back(b.complete(user("q"), {}));
    }
    CHECK(first == second);
    CHECK(first == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(ScriptedBackend::parse_script(nlohmann::json::parse(R"({"reply": "a"})")), LoadError);
    CHECK_THROWS_AS(ScriptedBackend::parse_script(nlohmann::json::parse(R"([{"match": "x"}])")), LoadError);
}

TEST_CASE("complete preconditions and parameter validation") {
    ScriptedBackend b({{std::nullopt, "x"}});
    CHECK_THROWS_AS(b.complete({}, {}), ArgumentError);
    std::vector<ChatTurn> assistant_last{{Role::user, "q"}, {Role::assistant, "a"}};
    CHECK_THROWS_AS(b.complete(assistant_last, {}), ArgumentError);

    GenerationParams p;
    CHECK(p.temperature == 0.7);
    CHECK(p.top_p == 0.9);
    CHECK_NOTHROW(p.validate());
    CHECK_THROWS_AS((GenerationParams{-1.0, 0.9, 10, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((GenerationParams{0.7, 0.0, 10, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((GenerationParams{0.7, 1.5, 10, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((GenerationParams{0.7, 0.9, 0, {}}.validate()), ConfigError);
}

TEST_CASE("wire request and response") {
    std::vector<ChatTurn> turns{{Role::system, "sys"}, {Role::user, "Plan 1:\n\"quoted\" ünïcode"}};
    auto body = make_chat_request("m", turns, GenerationParams{0.5, 0.8, 64, {"Observation"}});
    CHECK(body["model"] == "m");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == turns[1].content);
    CHECK(body["temperature"] == 0.5);
    CHECK(body["top_p"] == 0.8);
    CHECK(body["max_tokens"] == 64);
    CHECK(body["stop"] == nlohmann::json::array({"Observation"}));
    CHECK_FALSE(make_chat_request("m", turns, GenerationParams{}).contains("stop"));

    CHECK(parse_chat_response(testing::StubServer::reply("hi")) == "hi");
    CHECK_THROWS_AS(parse_chat_response("{}"), GatewayError);
    CHECK_THROWS_AS(parse_chat_response("nope"), GatewayError);
}

TEST_CASE("remote backend against a local stub") {
    testing::StubServer server([](const std::string&, int) { return std::pair{200, testing::StubServer::reply("canned")}; });
    RemoteBackend b(RemoteConfig{server.url(), "toy-model", "sekret", 5s});
    const std::string content = "line one\nline \"two\" with ünïcode and {braces}";
    CHECK(b.complete(user(content), GenerationParams{}) == "canned");

    auto bodies = server.bodies();
    REQUIRE(bodies.size() == 1);
    auto sent = nlohmann::json::parse(bodies[0]);
    CHECK(sent["messages"][0]["content"].get<std::string>() == content);
    CHECK(sent["model"] == "toy-model");
    CHECK(server.auth_headers()[0] == "Bearer sekret");
}

TEST_CASE("remote failures are gateway errors naming the backend") {
    testing::StubServer server([](const std::string&, int) { return std::pair{503, std::string("{}")}; });
    RemoteBackend b(RemoteConfig{server.url(), "m", "", 5s});
    try {
        b.complete(user("x"), {});
        FAIL("expected a gateway error");
    } catch (const GatewayError& e) {
        CHECK(e.retryable());
        CHECK(std::string(e.what()).find("503") != std::string::npos);
        CHECK(e.backend().find("remote") != std::string::npos);
    }

    RemoteBackend dead(RemoteConfig{"http://127.0.0.1:1/v1/chat/completions", "m", "", 1s});
    CHECK_THROWS_AS(dead.complete(user("x"), {}), GatewayError);
    CHECK_THROWS_AS(RemoteBackend(RemoteConfig{"not a url", "m", "", 1s}), ConfigError);
}

TEST_CASE("retry wrapper") {
    SUBCASE("two failures then success") {
        auto inner = std::make_shared<Flaky>(2);
        auto b = with_retry(inner, RetryPolicy{3, {}});
        CHECK(b->complete(user("x"), {}) == "ok");
        CHECK(inner->calls == 3);
    }
    SUBCASE("always failing stops at max attempts") {
        auto inner = std::make_shared<Flaky>(-1);
        auto b = with_retry(inner, RetryPolicy{2, {}});
        CHECK_THROWS_AS(b->complete(user("x"), {}), GatewayError);
        CHECK(inner->calls == 2);
    }
    SUBCASE("non-retryable errors propagate at once") {
        auto inner = std::make_shared<Flaky>(-1, false);
        auto b = with_retry(inner, RetryPolicy{5, {}});
        CHECK_THROWS_AS(b->complete(user("x"), {}), GatewayError);
        CHECK(inner->calls == 1);
    }
    SUBCASE("script errors are not retried") {
        auto inner = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Entry>{});
        auto b = with_retry(inner, RetryPolicy{5, {}});
        CHECK_THROWS_AS(b->complete(user("x"), {}), ScriptError);
    }
    SUBCASE("backoff schedule is honoured") {
        auto inner = std::make_shared<Flaky>(2);
        auto b = with_retry(inner, RetryPolicy{3, {10ms, 20ms}});
        CHECK(b->complete(user("x"), {}) == "ok");
        REQUIRE(inner->times.size() == 3);
        CHECK(inner->times[1] - inner->times[0] >= 10ms);
        CHECK(inner->times[2] - inner->times[1] >= 20ms);
    }
    SUBCASE("transparent on success") {
        auto inner = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Entry>{{std::nullopt, "same"}});
        auto b = with_retry(inner, RetryPolicy{});
        CHECK(b->complete(user("x"), {}) == "same");
        CHECK(b->name() == inner->name());
    }
    SUBCASE("retry over the wire") {
        testing::StubServer server([](const std::string&, int call) {
            return call < 3 ? std::pair{500, std::string("{}")} : std::pair{200, testing::StubServer::reply("third")};
        });
        auto b = with_retry(std::make_shared<RemoteBackend>(RemoteConfig{server.url(), "m", "", 5s}), RetryPolicy{3, {}});
        CHECK(b->complete(user("x"), {}) == "third");
        CHECK(server.bodies().size() == 3);
    }
}
