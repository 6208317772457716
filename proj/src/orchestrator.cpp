#include "kgqa/orchestrator.hpp"

#include <regex>

#include "kgqa/text.hpp"

namespace kgqa {

namespace {

constexpr std::string_view kReflectionHeader =
    "You have attempted to answer following question before and failed. The following reflection(s) give a "
    "plan to avoid failing to answer the question in the same way you did previously. Use them to improve "
    "your strategy of correctly answering the given question.\nReflections:";
constexpr std::string_view kEndOfReflection = "(END OF REFLECTION)";

const std::regex& any_label_re() {
    static const std::regex re(R"(^[ \t]*(plan|thought|action|observation)[ \t]*\d*[ \t]*:)", std::regex::icase);
    return re;
}

}  // namespace

std::string_view to_string(StepRole role) {
    switch (role) {
        case StepRole::plan: return "plan";
        case StepRole::thought: return "thought";
        case StepRole::action: return "action";
    }
    return "plan";
}

std::string_view label_of(StepRole role) {
    switch (role) {
        case StepRole::plan: return "Plan";
        case StepRole::thought: return "Thought";
        case StepRole::action: return "Action";
    }
    return "Plan";
}

void EpisodeConfig::validate() const {
    if (max_steps < 1) throw ConfigError("max steps (T) must be >= 1");
    if (max_reflections < 0) throw ConfigError("max reflections (N) must be >= 0");
    reasoning.validate();
    judge.validate();
    reflect.validate();
}

StepRole next_role(const ReasoningTrace& trace) {
    if (trace.steps.empty()) return StepRole::plan;
    const auto& last = trace.steps.back();
    if (last.complete() || !last.plan) return StepRole::plan;
    if (!last.thought) return StepRole::thought;
    if (!last.action) return StepRole::action;
    return StepRole::plan;
}

std::string render_scratchpad(std::span<const ReasoningStep> steps) {
    std::string out;
    for (const auto& s : steps) {
        const auto k = std::to_string(s.index);
        if (s.plan) out += "Plan " + k + ": " + *s.plan + "\n";
        if (s.thought) out += "Thought " + k + ": " + *s.thought + "\n";
        if (s.action) out += "Action " + k + ": " + *s.action + "\n";
        if (s.observation) out += "Observation " + k + ": " + s.observation->text + "\n";
    }
    return out;
}

std::string render_reflections(std::span<const std::string> reflections) {
    if (reflections.empty()) return {};
    std::string out(kReflectionHeader);
    for (const auto& r : reflections) out += "\n- " + r;
    return out;
}

std::vector<ChatTurn> build_prompt(const PromptCatalog& catalog, const ReasoningTrace& trace, StepRole role) {
    int k = 1;
    if (!trace.steps.empty()) {
        const auto& last = trace.steps.back();
        k = role == StepRole::plan && last.complete() ? last.index + 1 : last.index;
    }
    auto prompt = text::fill(catalog.reasoning, {
                                                    {"examples", catalog.examples},
                                                    {"reflections", render_reflections(trace.reflections)},
                                                    {"graph_definition", catalog.graph_definition},
                                                    {"question", trace.question},
                                                    {"scratchpad", render_scratchpad(trace.steps)},
                                                });
    prompt += std::string(label_of(role)) + " " + std::to_string(k) + ":";
    return {ChatTurn{Role::user, std::move(prompt)}};
}

std::string clean_reply(std::string_view reply, StepRole role) {
    std::string s(text::trim(reply));

    std::smatch m;
    if (std::regex_search(s, m, any_label_re(), std::regex_constants::match_continuous) &&
        text::iequals(m[1].str(), label_of(role))) {
        s = std::string(text::trim(std::string_view(s).substr(static_cast<std::size_t>(m.length(0)))));
    }

    // Cut where the model starts writing the next role on its own.
    std::size_t line_start = 0;
    while (line_start < s.size()) {
        auto line_end = s.find('\n', line_start);
        if (line_end == std::string::npos) line_end = s.size();
        const std::string line = s.substr(line_start, line_end - line_start);
        if (line_start > 0 && std::regex_search(line, any_label_re(), std::regex_constants::match_continuous)) {
            s.resize(line_start);
            break;
        }
        line_start = line_end + 1;
    }
    // A label glued onto the same line ("...plan. Thought 1: ...").
    static const std::regex inline_re(R"((plan|thought|action|observation)[ \t]*\d+[ \t]*:)", std::regex::icase);
    if (std::regex_search(s, m, inline_re) && m.position(0) > 0) s.resize(static_cast<std::size_t>(m.position(0)));

    auto out = std::string(text::trim(s));
    if (role == StepRole::action) {
        auto nl = out.find('\n');
        if (nl != std::string::npos) out = std::string(text::trim(std::string_view(out).substr(0, nl)));
    }
    return out;
}

std::optional<std::string> regularize(std::string_view action_raw) {
    static const std::regex finish_re(R"(finish[ \t]*\[)", std::regex::icase);
    const std::string s(action_raw);
    std::smatch m;
    if (!std::regex_search(s, m, finish_re)) return std::nullopt;
    const auto open = static_cast<std::size_t>(m.position(0) + m.length(0)) - 1;
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '[') ++depth;
        else if (s[i] == ']' && --depth == 0) return std::string(text::trim(std::string_view(s).substr(open + 1, i - open - 1)));
    }
    return std::nullopt;
}

bool parse_verdict(std::string_view reply, bool* anomaly) {
    const auto yes = text::irfind(reply, "[yes]");
    const auto no = text::irfind(reply, "[no]");
    if (anomaly != nullptr) *anomaly = yes == std::string_view::npos && no == std::string_view::npos;
    if (yes == std::string_view::npos) return false;
    return no == std::string_view::npos || yes > no;
}

InnerResult run_inner_loop(const GraphEnv& env, ChatBackend& backend, const PromptCatalog& catalog,
                           ReasoningTrace& trace, const EpisodeConfig& config, const EpisodeObserver& observer,
                           int attempt) {
    auto emit = [&](int t, std::string_view role, const std::string& text) {
        if (observer) observer(StepEvent{attempt, t, std::string(role), text});
    };

    for (;;) {
        if (!trace.steps.empty() && trace.steps.back().complete() &&
            trace.steps.size() >= static_cast<std::size_t>(config.max_steps)) {
            return {std::nullopt, true};
        }
        const StepRole role = next_role(trace);
        const auto prompt = build_prompt(catalog, trace, role);
        auto reply = clean_reply(backend.complete(prompt, config.reasoning), role);

        if (role == StepRole::plan) {
            ReasoningStep step;
            step.index = static_cast<int>(trace.steps.size()) + 1;
            step.plan = std::move(reply);
            trace.steps.push_back(std::move(step));
            emit(trace.steps.back().index, "plan", *trace.steps.back().plan);
            continue;
        }

        auto& step = trace.steps.back();
        if (role == StepRole::thought) {
            step.thought = std::move(reply);
            emit(step.index, "thought", *step.thought);
            continue;
        }

        step.action = std::move(reply);
        emit(step.index, "action", *step.action);
        Observation obs;
        try {
            auto actions = parse_actions(*step.action);
            if (is_finish(actions)) {
                step.finish = true;
                return {regularize(*step.action), false};
            }
            obs = eval_action_list(env, actions, config.eval);
        } catch (const ActionParseError& e) {
            obs = Observation{e.what(), Observation::Outcome::advisory};
        }
        step.observation = std::move(obs);
        emit(step.index, "observation", step.observation->text);

        if (config.max_scratchpad_chars > 0 &&
            render_scratchpad(trace.steps).size() > config.max_scratchpad_chars) {
            return {std::nullopt, true};
        }
    }
}

bool judge(ChatBackend& backend, const PromptCatalog& catalog, const ReasoningTrace& trace,
           const GenerationParams& params, std::string* raw_reply) {
    auto prompt = text::fill(catalog.evaluation, {
                                                     {"examples", catalog.evaluation_examples},
                                                     {"graph_definition", catalog.graph_definition},
                                                     {"question", trace.question},
                                                     {"scratchpad", render_scratchpad(trace.steps)},
                                                 });
    const std::vector<ChatTurn> turns{{Role::user, std::move(prompt)}};
    auto reply = backend.complete(turns, params);
    const bool verdict = parse_verdict(reply);
    if (raw_reply != nullptr) *raw_reply = std::move(reply);
    return verdict;
}

std::string reflect(ChatBackend& backend, const PromptCatalog& catalog, const ReasoningTrace& trace,
                    const GenerationParams& params) {
    auto prompt = text::fill(catalog.reflection, {
                                                     {"graph_definition", catalog.graph_definition},
                                                     {"examples", catalog.reflection_examples},
                                                     {"question", trace.question},
                                                     {"scratchpad", render_scratchpad(trace.steps)},
                                                 });
    const std::vector<ChatTurn> turns{{Role::user, std::move(prompt)}};
    const auto reply = backend.complete(turns, params);
    std::string_view body(reply);
    if (auto end = text::ifind(body, kEndOfReflection); end != std::string_view::npos) body = body.substr(0, end);
    return std::string(text::trim(body));
}

EpisodeState run_episode(const GraphEnv& env, const EpisodeBackends& backends, const PromptCatalog& catalog,
                         std::string_view question, const EpisodeConfig& config, const EpisodeObserver& observer) {
    config.validate();
    EpisodeState st;
    st.trace.question = std::string(text::trim(question));

    while (st.n <= config.max_reflections && !st.correct) {
        const int attempt = static_cast<int>(st.attempts.size()) + 1;
        st.trace.steps.clear();
        auto inner = run_inner_loop(env, backends.reasoning, catalog, st.trace, config, observer, attempt);
        st.attempts.push_back(st.trace.steps);

        if (inner.answer) {
            st.final_answer = inner.answer;
            std::string raw;
            st.correct = judge(backends.judge, catalog, st.trace, config.judge, &raw);
            ++st.judge_calls;
            if (observer) {
                bool anomaly = false;
                parse_verdict(raw, &anomaly);
                observer(StepEvent{attempt, 0, "judge", anomaly ? raw + "\n(no [yes]/[no] token; treated as [no])" : raw});
            }
        }
        if (st.correct || st.n >= config.max_reflections) break;

        auto reflection = reflect(backends.reflect, catalog, st.trace, config.reflect);
        ++st.reflect_calls;
        if (observer) observer(StepEvent{attempt, 0, "reflection", reflection});
        st.trace.reflections.push_back(std::move(reflection));
        ++st.n;
    }
    return st;
}

}  // namespace kgqa
