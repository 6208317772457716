#include "kgqa/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <ostream>
#include <set>

#include "kgqa/benchmark.hpp"
#include "kgqa/config.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/graph_store.hpp"
#include "kgqa/replay.hpp"
#include "kgqa/retrieval.hpp"

namespace kgqa {

namespace {

struct CommonFlags {
    std::string config;
    std::optional<int> t_max;
    std::optional<int> n_reflect;
    std::optional<int> workers;
    std::optional<std::string> url;
    std::optional<std::string> model;
    std::optional<std::string> key;
    std::optional<std::string> out;
    std::optional<long long> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON configuration file");
    cmd->add_option("--t-max", f.t_max, "Maximum reasoning steps per attempt (T)");
    cmd->add_option("--n-reflect", f.n_reflect, "Maximum reflection rounds (N)");
    cmd->add_option("--workers", f.workers, "Concurrent episodes for bench");
    cmd->add_option("--backend-url", f.url, "Chat-completions endpoint (overrides GC_LLM_URL)");
    cmd->add_option("--backend-model", f.model, "Model name (overrides GC_LLM_MODEL)");
    cmd->add_option("--backend-key", f.key, "API key (overrides GC_LLM_KEY)");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--seed", f.seed, "Reserved; the engine has no random state");
}

RunConfig effective_config(const CommonFlags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    apply_env(c);
    Overrides o;
    o.max_steps = f.t_max;
    o.max_reflections = f.n_reflect;
    o.workers = f.workers;
    o.url = f.url;
    o.model = f.model;
    o.api_key = f.key;
    if (f.out) o.out_dir = *f.out;
    apply_overrides(c, o);
    return c;
}

/// Loaded graph, index and prompts for one domain.
struct LoadedDomain {
    KnowledgeGraph graph;
    std::unique_ptr<RetrievalIndex> index;
    PromptCatalog catalog;
};

LoadedDomain load_domain(const RunConfig& c, const std::string& name) {
    auto it = c.domains.find(name);
    if (it == c.domains.end()) {
        std::string known;
        for (const auto& [k, _] : c.domains) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("domain '" + name + "' is not configured (known: " + (known.empty() ? "none" : known) +
                          "); add it under \"domains\" in the config file");
    }
    LoadedDomain d;
    try {
        d.graph = load_graph(it->second.graph);
    } catch (const LoadError& e) {
        throw ConfigError("domain '" + name + "': " + e.what());
    }
    d.index = std::make_unique<RetrievalIndex>(
        build_index(d.graph, it->second.retrieval_fields, ScorerRegistry::global().make(c.scorer)));
    d.catalog = PromptCatalog::load(it->second.prompts);
    return d;
}

BackendSet make_backends(const RunConfig& c, const std::string& qid, bool scoring) {
    BackendSet s;
    s.reasoning = make_backend(c.backend, qid);
    s.judge = c.judge_backend ? make_backend(*c.judge_backend, qid) : s.reasoning;
    s.reflect = c.reflect_backend ? make_backend(*c.reflect_backend, qid) : s.reasoning;
    if (scoring) s.scorer = c.scoring_backend ? make_backend(*c.scoring_backend, qid) : s.reasoning;
    return s;
}

nlohmann::json event_json(const std::string& qid, const StepEvent& e) {
    return {{"question_id", qid}, {"attempt", e.attempt}, {"t", e.t}, {"role", e.role}, {"text", e.text}};
}

int cmd_ask(const CommonFlags& f, const std::string& domain, const std::string& question, const std::string& qid,
            std::ostream& out, std::ostream& err) {
    auto c = effective_config(f);
    c.validate();
    auto d = load_domain(c, domain);
    auto backends = make_backends(c, qid, false);

    std::vector<StepEvent> events;
    auto state = run_episode(GraphEnv{d.graph, *d.index}, EpisodeBackends{*backends.reasoning, *backends.judge,
                                                                          *backends.reflect},
                             d.catalog, question, c.episode, [&](const StepEvent& e) { events.push_back(e); });

    std::filesystem::create_directories(c.out_dir);
    const auto log_path = c.out_dir / ("ask-" + qid + ".ndjson");
    std::ofstream log(log_path, std::ios::trunc);
    for (const auto& e : events) log << event_json(qid, e).dump() << '\n';
    if (!log) err << "warning: could not write episode log " << log_path.string() << '\n';

    out << "answer: " << state.final_answer.value_or("(none)") << '\n'
        << "attempts: " << state.attempts.size() << '\n'
        << "reflections: " << state.reflect_calls << '\n'
        << "judged correct: " << (state.correct ? "yes" : "no") << '\n'
        << "log: " << log_path.string() << '\n';
    return kExitOk;
}

int cmd_bench(const CommonFlags& f, const std::string& dataset_path, bool resume, std::ostream& out) {
    auto c = effective_config(f);
    c.validate();
    std::vector<QARecord> dataset;
    try {
        dataset = load_dataset(dataset_path);
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }

    std::set<std::string> wanted;
    for (const auto& r : dataset) wanted.insert(r.domain);
    std::map<std::string, LoadedDomain> loaded;
    std::map<std::string, DomainResources> resources;
    for (const auto& name : wanted) {
        if (!c.domains.count(name)) continue;  // its records fail individually
        auto [it, _] = loaded.emplace(name, load_domain(c, name));
        resources[name] = DomainResources{&it->second.graph, it->second.index.get(), &it->second.catalog};
    }

    BenchOptions opt;
    opt.episode = c.episode;
    opt.workers = c.workers;
    opt.out_dir = c.out_dir;
    opt.resume = resume;
    const bool scoring = c.llm_scoring;
    auto outcome = run_benchmark(
        dataset, resources, [&](const QARecord& r) { return make_backends(c, r.question_id, scoring); }, opt);

    out << format_report(outcome.report);
    if (outcome.skipped > 0) out << outcome.skipped << " record(s) carried over from an earlier run\n";
    out << "results: " << (c.out_dir / "results.ndjson").string() << '\n';
    return kExitOk;
}

int cmd_replay(const std::vector<std::string>& dirs, std::ostream& out) {
    int rc = kExitOk;
    for (const auto& dir : dirs) {
        auto r = replay_fixture(dir);
        char time[32];
        std::snprintf(time, sizeof time, "%.3f", r.seconds);
        if (r.passed()) {
            out << "PASS " << dir << ": answer \"" << r.state.final_answer.value_or("") << "\", "
                << r.state.attempts.size() << " attempt(s), " << r.state.reflect_calls << " reflection(s), " << time
                << " s\n";
        } else {
            rc = kExitFailure;
            out << "FAIL " << dir << '\n';
            for (const auto& msg : r.failures) out << "  " << msg << '\n';
        }
    }
    return rc;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    KnowledgeGraph g;
    try {
        g = load_graph(path);
    } catch (const LoadError& e) {
        err << "invalid graph: " << e.what() << '\n';
        return kExitFailure;
    }
    const auto& schema = g.schema();
    out << "nodes: " << g.size() << '\n'
        << "edges: " << g.edge_count() << '\n'
        << "adjacency keys: " << g.adjacency_key_count() << '\n'
        << "feature types (" << schema.feature_types.size() << "):";
    for (const auto& ft : schema.feature_types) out << ' ' << ft;
    out << '\n' << "edge labels (" << schema.edge_labels.size() << "):";
    for (const auto& l : schema.edge_labels) out << ' ' << l;
    out << '\n' << "warnings: " << g.warnings().size() << '\n';
    for (const auto& w : g.warnings()) out << "  warning: " << w << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-graph question answering with plan/thought/action reasoning and judged reflection",
                 "kgqa"};
    app.require_subcommand(1);

    CommonFlags ask_flags, bench_flags, show_flags;

    auto* ask = app.add_subcommand("ask", "Answer one question and save the episode log");
    std::string domain, question, qid = "ask";
    add_common(ask, ask_flags);
    ask->add_option("--domain", domain, "Configured domain to query")->required();
    ask->add_option("--question-id", qid, "Key into a scripted backend's script map; names the log file");
    ask->add_option("question", question, "Question text")->required();

    auto* bench = app.add_subcommand("bench", "Run a dataset and write results, logs and a report");
    std::string dataset;
    bool resume = false;
    add_common(bench, bench_flags);
    bench->add_option("dataset", dataset, "Newline-delimited dataset file")->required();
    bench->add_flag("--resume", resume, "Skip question_ids already in the results file");

    auto* replay = app.add_subcommand("replay", "Replay recorded episodes and compare them byte for byte");
    std::vector<std::string> fixtures;
    replay->add_option("fixture", fixtures, "Fixture directories containing fixture.json")->required();

    auto* validate = app.add_subcommand("validate", "Load a graph file and print counts and warnings");
    std::string graph_path;
    validate->add_option("graph", graph_path, "Graph file")->required();

    auto* show = app.add_subcommand("config-show", "Print the effective configuration");
    add_common(show, show_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run 'kgqa --help' for usage\n";
        return kExitUsage;
    }

    try {
        if (*ask) return cmd_ask(ask_flags, domain, question, qid, out, err);
        if (*bench) return cmd_bench(bench_flags, dataset, resume, out);
        if (*replay) return cmd_replay(fixtures, out);
        if (*validate) return cmd_validate(graph_path, out, err);
        if (*show) {
            out << config_to_json(effective_config(show_flags)).dump(2) << '\n';
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ArgumentError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace kgqa
