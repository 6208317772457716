#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgqa/errors.hpp"

namespace kgqa {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatTurn {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct GenerationParams {
    double temperature = 0.7;
    double top_p = 0.9;
    int max_new_tokens = 512;
    std::vector<std::string> stop;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Transport failure or non-success status from a backend.
class GatewayError : public Error {
public:
    GatewayError(std::string backend, const std::string& what, bool retryable = true)
        : Error(backend + ": " + what), backend_(std::move(backend)), retryable_(retryable) {}

    const std::string& backend() const { return backend_; }
    bool retryable() const { return retryable_; }

private:
    std::string backend_;
    bool retryable_;
};

/// A scripted backend was driven differently from its script. Never retried.
class ScriptError : public Error {
public:
    using Error::Error;
};

/// One chat-completion contract for every role the agent plays.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    /// `turns` must be non-empty and end with a user or system turn.
    std::string complete(std::span<const ChatTurn> turns, const GenerationParams& params);

    virtual std::string name() const = 0;

protected:
    virtual std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) = 0;
};

/// Replays a fixed list of replies. Each call consumes one entry; when the
/// entry carries a `match`, the last user turn must contain it.
/// Strictly sequential: do not share one instance across episodes.
class ScriptedBackend final : public ChatBackend {
public:
    struct Entry {
        std::optional<std::string> match;  // nullopt = wildcard
        std::string reply;
    };

    explicit ScriptedBackend(std::vector<Entry> script, std::string label = "scripted");

    /// Accepts [{"match": "...", "reply": "..."}, ...]; a missing or null match is a wildcard.
    static std::vector<Entry> parse_script(const nlohmann::json& doc);

    std::string name() const override { return label_; }
    std::size_t cursor() const;
    std::size_t remaining() const;

protected:
    std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) override;

private:
    std::vector<Entry> script_;
    std::size_t cursor_ = 0;
    std::string label_;
    mutable std::mutex mu_;
};

/// Delegates to a callable. Handy for deterministic stand-ins in tests and benches.
class CallbackBackend final : public ChatBackend {
public:
    using Fn = std::function<std::string(std::span<const ChatTurn>, const GenerationParams&)>;

    explicit CallbackBackend(Fn fn, std::string label = "callback") : fn_(std::move(fn)), label_(std::move(label)) {}
    std::string name() const override { return label_; }

protected:
    std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) override {
        return fn_(turns, params);
    }

private:
    Fn fn_;
    std::string label_;
};

struct RemoteConfig {
    /// Full endpoint, e.g. http://localhost:8000/v1/chat/completions
    std::string url;
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{120};
};

/// Chat-completions client over HTTP(S). Stateless per request, so one
/// instance may serve concurrent episodes.
class RemoteBackend final : public ChatBackend {
public:
    explicit RemoteBackend(RemoteConfig config);
    std::string name() const override;

protected:
    std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) override;

private:
    RemoteConfig config_;
    std::string origin_;
    std::string path_;
};

/// Request body: {model, messages[{role, content}], temperature, top_p, max_tokens, stop}.
nlohmann::json make_chat_request(std::string_view model, std::span<const ChatTurn> turns,
                                 const GenerationParams& params);
/// choices[0].message.content; throws GatewayError (non-retryable) when absent.
std::string parse_chat_response(std::string_view body, std::string_view backend = "remote");

struct RetryPolicy {
    int max_attempts = 3;
    /// Delay before attempt k+1 is backoff[min(k-1, size-1)]; empty = no delay.
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500), std::chrono::milliseconds(2000)};
};

/// Retries retryable GatewayErrors per `policy`; everything else propagates at once.
std::shared_ptr<ChatBackend> with_retry(std::shared_ptr<ChatBackend> backend, RetryPolicy policy);

}  // namespace kgqa
