#include "kgqa/replay.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "kgqa/errors.hpp"
#include "kgqa/graph_store.hpp"
#include "kgqa/retrieval.hpp"

namespace kgqa {

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw LoadError("cannot open " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string_view> lines_of(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, nl - start + 1));
        start = nl + 1;
    }
    return out;
}

}  // namespace

std::string first_divergence(std::string_view expected, std::string_view actual) {
    if (expected == actual) return {};
    const auto e = lines_of(expected);
    const auto a = lines_of(actual);
    for (std::size_t i = 0; i < std::max(e.size(), a.size()); ++i) {
        const auto ev = i < e.size() ? std::string(e[i]) : std::string("<end of text>");
        const auto av = i < a.size() ? std::string(a[i]) : std::string("<end of text>");
        if (ev != av) {
            return "line " + std::to_string(i + 1) + ":\n  expected: " + ev + (ev.ends_with('\n') ? "" : "\n") +
                   "  actual:   " + av + (av.ends_with('\n') ? "" : "\n");
        }
    }
    return "texts differ";
}

ReplayResult replay_fixture(const std::filesystem::path& dir) {
    const auto spec = nlohmann::json::parse(slurp(dir / "fixture.json"), nullptr, false);
    if (spec.is_discarded() || !spec.is_object()) throw LoadError((dir / "fixture.json").string() + " is not a JSON object");

    auto str = [&](const char* key) {
        if (!spec.contains(key) || !spec[key].is_string()) {
            throw LoadError("fixture.json: \"" + std::string(key) + "\" must be a string");
        }
        return spec[key].get<std::string>();
    };

    const auto graph = load_graph(dir / str("graph"));
    const auto fields = spec.value("retrieval_fields", std::vector<std::string>{});
    const auto index = build_index(graph, fields);
    const auto catalog = PromptCatalog::load(dir / str("prompts"));

    auto script_doc = nlohmann::json::parse(slurp(dir / str("script")), nullptr, false);
    if (script_doc.is_discarded()) throw LoadError("fixture script is not valid JSON");
    ScriptedBackend backend(ScriptedBackend::parse_script(script_doc), "replay");

    EpisodeConfig config;
    config.max_steps = spec.value("max_steps", config.max_steps);
    config.max_reflections = spec.value("max_reflections", config.max_reflections);

    const auto& expected = spec.at("expected");
    ReplayResult out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        out.state = run_episode(GraphEnv{graph, index}, EpisodeBackends{backend, backend, backend}, catalog,
                                str("question"), config);
    } catch (const ScriptError& e) {
        out.failures.push_back(std::string("episode diverged from script: ") + e.what());
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.failures.empty()) return out;

    const auto& st = out.state;
    if (expected.contains("scratchpads")) {
        const auto files = expected["scratchpads"].get<std::vector<std::string>>();
        if (files.size() != st.attempts.size()) {
            out.failures.push_back("expected " + std::to_string(files.size()) + " attempts, got " +
                                   std::to_string(st.attempts.size()));
        }
        for (std::size_t i = 0; i < std::min(files.size(), st.attempts.size()); ++i) {
            const auto want = slurp(dir / files[i]);
            const auto got = render_scratchpad(st.attempts[i]);
            if (auto d = first_divergence(want, got); !d.empty()) {
                out.failures.push_back("attempt " + std::to_string(i + 1) + " scratchpad (" + files[i] + ") " + d);
            }
        }
    }
    if (expected.contains("answer")) {
        const auto want = expected["answer"].get<std::string>();
        if (st.final_answer != want) {
            out.failures.push_back("final answer: expected \"" + want + "\", got " +
                                   (st.final_answer ? "\"" + *st.final_answer + "\"" : std::string("none")));
        }
    }
    if (expected.contains("correct") && expected["correct"].get<bool>() != st.correct) {
        out.failures.push_back(std::string("correctness flag: expected ") + (st.correct ? "false" : "true"));
    }
    if (expected.contains("attempts") && expected["attempts"].get<std::size_t>() != st.attempts.size()) {
        out.failures.push_back("attempts: expected " + expected["attempts"].dump() + ", got " +
                               std::to_string(st.attempts.size()));
    }
    if (expected.contains("reflections") && expected["reflections"].get<int>() != st.reflect_calls) {
        out.failures.push_back("reflections: expected " + expected["reflections"].dump() + ", got " +
                               std::to_string(st.reflect_calls));
    }
    if (backend.remaining() != 0) {
        out.failures.push_back(std::to_string(backend.remaining()) + " scripted replies were never requested");
    }
    return out;
}

}  // namespace kgqa
