#include "kgqa/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "kgqa/errors.hpp"
#include "kgqa/retrieval.hpp"

namespace kgqa {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(where) + "." + key + " has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

BackendSpec backend_from_json(const json& obj, std::string_view where, const std::filesystem::path& base) {
    check_keys(obj, where, {"kind", "url", "model", "api_key", "timeout_s", "max_attempts", "script"});
    BackendSpec b;
    read(obj, "kind", b.kind, where);
    read(obj, "url", b.url, where);
    read(obj, "model", b.model, where);
    read(obj, "api_key", b.api_key, where);
    read(obj, "timeout_s", b.timeout_s, where);
    read(obj, "max_attempts", b.max_attempts, where);
    std::string script;
    read(obj, "script", script, where);
    b.script = resolve(base, script);
    return b;
}

void validate_backend(const BackendSpec& b, std::string_view where) {
    if (b.kind == "remote") {
        if (b.url.empty()) throw ConfigError(std::string(where) + ": remote backend needs a url (set GC_LLM_URL or --backend-url)");
        if (b.timeout_s < 1) throw ConfigError(std::string(where) + ": timeout_s must be >= 1");
        if (b.max_attempts < 1) throw ConfigError(std::string(where) + ": max_attempts must be >= 1");
    } else if (b.kind == "scripted") {
        if (b.script.empty()) throw ConfigError(std::string(where) + ": scripted backend needs a script file");
    } else {
        throw ConfigError(std::string(where) + ": unknown backend kind '" + b.kind + "' (remote or scripted)");
    }
}

json backend_json(const BackendSpec& b) {
    return {{"kind", b.kind},
            {"url", b.url},
            {"model", b.model},
            {"api_key", b.api_key.empty() ? "" : "***"},
            {"timeout_s", b.timeout_s},
            {"max_attempts", b.max_attempts},
            {"script", b.script.string()}};
}

}  // namespace

void RunConfig::validate() const {
    episode.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    validate_backend(backend, "backend");
    if (judge_backend) validate_backend(*judge_backend, "judge_backend");
    if (reflect_backend) validate_backend(*reflect_backend, "reflect_backend");
    if (scoring_backend) validate_backend(*scoring_backend, "scoring_backend");
    const auto names = ScorerRegistry::global().names();
    if (std::find(names.begin(), names.end(), scorer) == names.end()) {
        throw ConfigError("unknown retrieval scorer '" + scorer + "'");
    }
    for (const auto& [name, d] : domains) {
        if (d.graph.empty()) throw ConfigError("domain '" + name + "' has no graph path");
        if (d.prompts.empty()) throw ConfigError("domain '" + name + "' has no prompts directory");
    }
}

RunConfig config_from_json(const json& doc, const std::filesystem::path& base) {
    check_keys(doc, "config", {"domains", "backend", "judge_backend", "reflect_backend", "scoring_backend",
                               "llm_scoring", "episode", "retrieval", "workers", "out"});
    RunConfig c;
    if (doc.contains("domains")) {
        const auto& ds = doc["domains"];
        if (!ds.is_object()) throw ConfigError("config.domains must be an object");
        for (const auto& [name, d] : ds.items()) {
            const auto where = "domains." + name;
            check_keys(d, where, {"graph", "prompts", "retrieval_fields"});
            DomainSpec spec;
            std::string graph, prompts;
            read(d, "graph", graph, where);
            read(d, "prompts", prompts, where);
            read(d, "retrieval_fields", spec.retrieval_fields, where);
            spec.graph = resolve(base, graph);
            spec.prompts = resolve(base, prompts);
            c.domains.emplace(name, std::move(spec));
        }
    }
    if (doc.contains("backend")) c.backend = backend_from_json(doc["backend"], "backend", base);
    if (doc.contains("judge_backend")) c.judge_backend = backend_from_json(doc["judge_backend"], "judge_backend", base);
    if (doc.contains("reflect_backend")) {
        c.reflect_backend = backend_from_json(doc["reflect_backend"], "reflect_backend", base);
    }
    if (doc.contains("scoring_backend")) {
        c.scoring_backend = backend_from_json(doc["scoring_backend"], "scoring_backend", base);
    }
    read(doc, "llm_scoring", c.llm_scoring, "config");

    if (doc.contains("episode")) {
        const auto& e = doc["episode"];
        check_keys(e, "episode", {"max_steps", "max_reflections", "temperature", "top_p", "max_new_tokens",
                                  "reflect_max_new_tokens", "max_scratchpad_chars", "neighbour_cap"});
        auto& ep = c.episode;
        read(e, "max_steps", ep.max_steps, "episode");
        read(e, "max_reflections", ep.max_reflections, "episode");
        double temperature = ep.reasoning.temperature, top_p = ep.reasoning.top_p;
        read(e, "temperature", temperature, "episode");
        read(e, "top_p", top_p, "episode");
        for (auto* p : {&ep.reasoning, &ep.judge, &ep.reflect}) {
            p->temperature = temperature;
            p->top_p = top_p;
        }
        read(e, "max_new_tokens", ep.reasoning.max_new_tokens, "episode");
        ep.judge.max_new_tokens = ep.reasoning.max_new_tokens;
        read(e, "reflect_max_new_tokens", ep.reflect.max_new_tokens, "episode");
        read(e, "max_scratchpad_chars", ep.max_scratchpad_chars, "episode");
        read(e, "neighbour_cap", ep.eval.neighbour_cap, "episode");
    }
    if (doc.contains("retrieval")) {
        check_keys(doc["retrieval"], "retrieval", {"scorer"});
        read(doc["retrieval"], "scorer", c.scorer, "retrieval");
    }
    read(doc, "workers", c.workers, "config");
    std::string out;
    read(doc, "out", out, "config");
    if (!out.empty()) c.out_dir = resolve(base, out);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    auto doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return config_from_json(doc, path.parent_path());
}

std::optional<std::string> process_env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

void apply_env(RunConfig& c, const EnvLookup& env) {
    if (auto v = env("GC_LLM_URL")) {
        c.backend.url = *v;
        c.backend.kind = "remote";
    }
    if (auto v = env("GC_LLM_MODEL")) c.backend.model = *v;
    if (auto v = env("GC_LLM_KEY")) c.backend.api_key = *v;
}

void apply_overrides(RunConfig& c, const Overrides& o) {
    if (o.max_steps) c.episode.max_steps = *o.max_steps;
    if (o.max_reflections) c.episode.max_reflections = *o.max_reflections;
    if (o.workers) c.workers = *o.workers;
    if (o.url) {
        c.backend.url = *o.url;
        c.backend.kind = "remote";
    }
    if (o.model) c.backend.model = *o.model;
    if (o.api_key) c.backend.api_key = *o.api_key;
    if (o.out_dir) c.out_dir = *o.out_dir;
}

json config_to_json(const RunConfig& c) {
    json domains = json::object();
    for (const auto& [name, d] : c.domains) {
        domains[name] = {{"graph", d.graph.string()},
                         {"prompts", d.prompts.string()},
                         {"retrieval_fields", d.retrieval_fields}};
    }
    const auto& ep = c.episode;
    json out = {
        {"domains", std::move(domains)},
        {"backend", backend_json(c.backend)},
        {"llm_scoring", c.llm_scoring},
        {"episode",
         {{"max_steps", ep.max_steps},
          {"max_reflections", ep.max_reflections},
          {"temperature", ep.reasoning.temperature},
          {"top_p", ep.reasoning.top_p},
          {"max_new_tokens", ep.reasoning.max_new_tokens},
          {"reflect_max_new_tokens", ep.reflect.max_new_tokens},
          {"max_scratchpad_chars", ep.max_scratchpad_chars},
          {"neighbour_cap", ep.eval.neighbour_cap}}},
        {"retrieval", {{"scorer", c.scorer}}},
        {"workers", c.workers},
        {"out", c.out_dir.string()},
    };
    if (c.judge_backend) out["judge_backend"] = backend_json(*c.judge_backend);
    if (c.reflect_backend) out["reflect_backend"] = backend_json(*c.reflect_backend);
    if (c.scoring_backend) out["scoring_backend"] = backend_json(*c.scoring_backend);
    return out;
}

std::shared_ptr<ChatBackend> make_backend(const BackendSpec& spec, const std::string& question_id) {
    if (spec.kind == "remote") {
        RemoteConfig rc{spec.url, spec.model, spec.api_key, std::chrono::seconds(spec.timeout_s)};
        RetryPolicy retry;
        retry.max_attempts = spec.max_attempts;
        return with_retry(std::make_shared<RemoteBackend>(std::move(rc)), std::move(retry));
    }
    if (spec.kind != "scripted") throw ConfigError("unknown backend kind '" + spec.kind + "'");

    std::ifstream in(spec.script);
    if (!in) throw ConfigError("cannot open script file " + spec.script.string());
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("script file " + spec.script.string() + " is not valid JSON");
    if (doc.is_object()) {
        if (!doc.contains(question_id)) {
            throw ConfigError("script file " + spec.script.string() + " has no entry for question_id '" +
                              question_id + "'");
        }
        doc = doc[question_id];
    }
    try {
        return std::make_shared<ScriptedBackend>(ScriptedBackend::parse_script(doc), "scripted:" + question_id);
    } catch (const LoadError& e) {
        throw ConfigError(spec.script.string() + ": " + e.what());
    }
}

}  // namespace kgqa
