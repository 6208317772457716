#include "kgqa/llm_gateway.hpp"

#include <cmath>
#include <regex>
#include <thread>

#include <httplib.h>

namespace kgqa {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

void GenerationParams::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
}

std::string ChatBackend::complete(std::span<const ChatTurn> turns, const GenerationParams& params) {
    if (turns.empty()) throw ArgumentError("complete: no chat turns given");
    if (turns.back().role == Role::assistant) throw ArgumentError("complete: last turn must be user or system");
    return do_complete(turns, params);
}

// --- scripted ---------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<Entry> script, std::string label)
    : script_(std::move(script)), label_(std::move(label)) {}

std::vector<ScriptedBackend::Entry> ScriptedBackend::parse_script(const nlohmann::json& doc) {
    if (!doc.is_array()) throw LoadError("script: expected an array of {match, reply} entries");
    std::vector<Entry> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& e = doc[i];
        if (!e.is_object() || !e.contains("reply") || !e["reply"].is_string()) {
            throw LoadError("script: entry " + std::to_string(i) + " needs a string \"reply\"");
        }
        Entry entry;
        entry.reply = e["reply"].get<std::string>();
        if (e.contains("match") && !e["match"].is_null()) entry.match = e["match"].get<std::string>();
        out.push_back(std::move(entry));
    }
    return out;
}

std::size_t ScriptedBackend::cursor() const {
    std::lock_guard lock(mu_);
    return cursor_;
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return script_.size() - cursor_;
}

std::string ScriptedBackend::do_complete(std::span<const ChatTurn> turns, const GenerationParams&) {
    std::lock_guard lock(mu_);
    if (cursor_ >= script_.size()) {
        throw ScriptError(label_ + ": script exhausted after " + std::to_string(script_.size()) + " replies");
    }
    const auto& entry = script_[cursor_];
    if (entry.match) {
        const ChatTurn* last_user = nullptr;
        for (const auto& t : turns) {
            if (t.role == Role::user) last_user = &t;
        }
        const std::string_view prompt = last_user ? std::string_view(last_user->content) : std::string_view();
        if (prompt.find(*entry.match) == std::string_view::npos) {
            throw ScriptError(label_ + ": entry " + std::to_string(cursor_) + " expected the prompt to contain \"" +
                              *entry.match + "\"");
        }
    }
    ++cursor_;
    return entry.reply;
}

// --- remote -----------------------------------------------------------------

nlohmann::json make_chat_request(std::string_view model, std::span<const ChatTurn> turns,
                                 const GenerationParams& params) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& t : turns) messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    nlohmann::json body = {
        {"model", model},
        {"messages", std::move(messages)},
        {"temperature", params.temperature},
        {"top_p", params.top_p},
        {"max_tokens", params.max_new_tokens},
    };
    if (!params.stop.empty()) body["stop"] = params.stop;
    return body;
}

std::string parse_chat_response(std::string_view body, std::string_view backend) {
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw GatewayError(std::string(backend), "response is not valid JSON", false);
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw GatewayError(std::string(backend), "response lacks choices[0].message.content", false);
    }
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(config_.url, m, url_re)) {
        throw ConfigError("backend url must look like http(s)://host[:port]/path, got '" + config_.url + "'");
    }
    origin_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string RemoteBackend::name() const { return "remote(" + config_.model + " @ " + config_.url + ")"; }

std::string RemoteBackend::do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) {
    const auto body = make_chat_request(config_.model, turns, params).dump();

    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) throw GatewayError(name(), "transport failure: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw GatewayError(name(), "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    return parse_chat_response(res->body, name());
}

// --- retry ------------------------------------------------------------------

namespace {

class RetryingBackend final : public ChatBackend {
public:
    RetryingBackend(std::shared_ptr<ChatBackend> inner, RetryPolicy policy)
        : inner_(std::move(inner)), policy_(std::move(policy)) {}

    std::string name() const override { return inner_->name(); }

protected:
    std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams& params) override {
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_->complete(turns, params);
            } catch (const GatewayError& e) {
                if (!e.retryable() || attempt >= policy_.max_attempts) throw;
            }
            if (!policy_.backoff.empty()) {
                auto k = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1), policy_.backoff.size() - 1);
                std::this_thread::sleep_for(policy_.backoff[k]);
            }
        }
    }

private:
    std::shared_ptr<ChatBackend> inner_;
    RetryPolicy policy_;
};

}  // namespace

std::shared_ptr<ChatBackend> with_retry(std::shared_ptr<ChatBackend> backend, RetryPolicy policy) {
    if (policy.max_attempts < 1) throw ConfigError("retry policy needs max_attempts >= 1");
    return std::make_shared<RetryingBackend>(std::move(backend), std::move(policy));
}

}  // namespace kgqa
