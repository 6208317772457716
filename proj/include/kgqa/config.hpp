#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgqa/llm_gateway.hpp"
#include "kgqa/orchestrator.hpp"

namespace kgqa {

/// How to reach one model role.
struct BackendSpec {
    /// "remote" or "scripted".
    std::string kind = "remote";
    std::string url;
    std::string model;
    std::string api_key;
    int timeout_s = 120;
    int max_attempts = 3;
    /// Scripted only: a JSON array of {match, reply}, or an object mapping
    /// question_id to such an array.
    std::filesystem::path script;
};

struct DomainSpec {
    std::filesystem::path graph;
    std::filesystem::path prompts;
    /// Feature names indexed for Retrieve; empty = every feature.
    std::vector<std::string> retrieval_fields;
};

/// Engine configuration. Loaded from a JSON file, then environment
/// (GC_LLM_URL, GC_LLM_MODEL, GC_LLM_KEY), then command-line overrides.
struct RunConfig {
    std::map<std::string, DomainSpec> domains;
    BackendSpec backend;
    /// Absent role backends share `backend`.
    std::optional<BackendSpec> judge_backend;
    std::optional<BackendSpec> reflect_backend;
    std::optional<BackendSpec> scoring_backend;
    /// Grade benchmark predictions with the scoring prompt.
    bool llm_scoring = false;

    EpisodeConfig episode;
    std::string scorer = "bm25";
    int workers = 1;
    std::filesystem::path out_dir = "out";

    /// Throws ConfigError on the first invalid field.
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
/// Reads the process environment.
std::optional<std::string> process_env(const char* name);
void apply_env(RunConfig& config, const EnvLookup& env = process_env);

struct Overrides {
    std::optional<int> max_steps;
    std::optional<int> max_reflections;
    std::optional<int> workers;
    std::optional<std::string> url;
    std::optional<std::string> model;
    std::optional<std::string> api_key;
    std::optional<std::filesystem::path> out_dir;
};
void apply_overrides(RunConfig& config, const Overrides& o);

/// Effective configuration as JSON; the API key is shown as "***" when set.
nlohmann::json config_to_json(const RunConfig& config);

/// Builds a backend. A scripted spec whose file is an object picks the
/// entry for `question_id` (ConfigError when missing).
std::shared_ptr<ChatBackend> make_backend(const BackendSpec& spec, const std::string& question_id = {});

}  // namespace kgqa
