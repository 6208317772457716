#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/action_lang.hpp"
#include "kgqa/llm_gateway.hpp"
#include "kgqa/prompt_catalog.hpp"

namespace kgqa {

/// The three roles one model alternates between inside an attempt.
enum class StepRole { plan, thought, action };

std::string_view to_string(StepRole role);
/// "Plan", "Thought", "Action".
std::string_view label_of(StepRole role);

/// One Plan/Thought/Action/Observation round. Fields fill in that order;
/// a Finish step never gets an observation.
struct ReasoningStep {
    int index = 1;
    std::optional<std::string> plan;
    std::optional<std::string> thought;
    std::optional<std::string> action;
    std::optional<Observation> observation;
    /// The action parsed as Finish.
    bool finish = false;

    bool complete() const { return observation.has_value() || finish; }
};

struct ReasoningTrace {
    std::string question;
    std::vector<ReasoningStep> steps;
    /// Reflections from earlier failed attempts, oldest first.
    std::vector<std::string> reflections;
};

struct EpisodeState {
    ReasoningTrace trace;
    /// Reflections performed so far.
    int n = 0;
    bool correct = false;
    /// Most recent answer produced by any attempt.
    std::optional<std::string> final_answer;

    /// Step history of every attempt, in order; the last equals trace.steps.
    std::vector<std::vector<ReasoningStep>> attempts;
    int judge_calls = 0;
    int reflect_calls = 0;
};

/// Everything an episode emits, for NDJSON logs and audits.
struct StepEvent {
    int attempt = 1;
    int t = 0;
    /// plan | thought | action | observation | judge | reflection
    std::string role;
    std::string text;
};

using EpisodeObserver = std::function<void(const StepEvent&)>;

struct EpisodeConfig {
    int max_steps = 10;        // T
    int max_reflections = 2;   // N
    GenerationParams reasoning{0.7, 0.9, 512, {"Observation"}};
    GenerationParams judge{0.7, 0.9, 512, {}};
    GenerationParams reflect{0.7, 0.9, 1024, {}};
    EvalOptions eval;
    /// Attempt ends without an answer once the scratchpad exceeds this many
    /// characters. 0 disables the limit.
    std::size_t max_scratchpad_chars = 0;

    void validate() const;
};

/// Backends per role. The same object may back all three.
struct EpisodeBackends {
    ChatBackend& reasoning;
    ChatBackend& judge;
    ChatBackend& reflect;
};

/// Role to request next: plan at the start or after an observation, then
/// thought, then action.
StepRole next_role(const ReasoningTrace& trace);

/// "Plan k: ...\nThought k: ...\nAction k: ...\nObservation k: ...\n" per
/// step, omitting fields not yet produced.
std::string render_scratchpad(std::span<const ReasoningStep> steps);

/// Empty when there are no reflections.
std::string render_reflections(std::span<const std::string> reflections);

/// Reasoning prompt for `role`, ending with its cue ("Plan k:" ...).
std::vector<ChatTurn> build_prompt(const PromptCatalog& catalog, const ReasoningTrace& trace, StepRole role);

/// Strip a leading "<Role> k:" label and cut at the next role label that
/// starts a line; actions keep their first line only.
std::string clean_reply(std::string_view reply, StepRole role);

/// Interior of the Finish[...] call in `action_raw`, trimmed. nullopt when
/// there is no Finish.
std::optional<std::string> regularize(std::string_view action_raw);

/// Rightmost-token rule: true iff "[yes]" occurs and no "[no]" follows it
/// (case-insensitive). `anomaly` is set when neither token appears.
bool parse_verdict(std::string_view reply, bool* anomaly = nullptr);

struct InnerResult {
    std::optional<std::string> answer;
    bool timed_out = false;
};

/// One attempt: Plan -> Thought -> Action turns until Finish or `max_steps`
/// completed steps. `trace.steps` must be empty on entry.
InnerResult run_inner_loop(const GraphEnv& env, ChatBackend& backend, const PromptCatalog& catalog,
                           ReasoningTrace& trace, const EpisodeConfig& config,
                           const EpisodeObserver& observer = {}, int attempt = 1);

bool judge(ChatBackend& backend, const PromptCatalog& catalog, const ReasoningTrace& trace,
           const GenerationParams& params, std::string* raw_reply = nullptr);

std::string reflect(ChatBackend& backend, const PromptCatalog& catalog, const ReasoningTrace& trace,
                    const GenerationParams& params);

/// Inner attempts gated by the judge, with reflection between attempts.
/// Bounds: at most N+1 attempts, T steps each, N+1 judge and N reflect calls.
EpisodeState run_episode(const GraphEnv& env, const EpisodeBackends& backends, const PromptCatalog& catalog,
                         std::string_view question, const EpisodeConfig& config,
                         const EpisodeObserver& observer = {});

}  // namespace kgqa
