#include "kgqa/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <optional>
#include <unordered_set>

#include "kgqa/errors.hpp"

namespace kgqa {

namespace {

double steady_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct Pending {
    ScoredResult result;
    std::vector<StepEvent> events;
};

Pending run_one(const QARecord& rec, const std::map<std::string, DomainResources>& domains,
                const BackendFactory& factory, const BenchOptions& opt, const std::function<double()>& clock) {
    Pending p;
    p.result.record = rec;
    const double start = clock();
    try {
        auto it = domains.find(rec.domain);
        if (it == domains.end() || !it->second.graph || !it->second.index || !it->second.catalog) {
            throw ConfigError("no graph and prompt catalog configured for domain '" + rec.domain + "'");
        }
        const auto& res = it->second;
        auto set = factory(rec);
        if (!set.reasoning) throw ConfigError("backend factory returned no reasoning backend");
        auto& judge = set.judge ? *set.judge : *set.reasoning;
        auto& refl = set.reflect ? *set.reflect : *set.reasoning;

        const GraphEnv env{*res.graph, *res.index};
        auto state = run_episode(env, EpisodeBackends{*set.reasoning, judge, refl}, *res.catalog, rec.question,
                                 opt.episode, [&](const StepEvent& e) { p.events.push_back(e); });
        p.result.predicted = state.final_answer;
        p.result.attempts_used = static_cast<int>(state.attempts.size());
        p.result.rouge_l = state.final_answer ? rouge_l(*state.final_answer, rec.gold_answer) : 0.0;
        if (set.scorer) {
            std::string err;
            p.result.judge_verdict =
                llm_judge_score(*set.scorer, *res.catalog, rec, state.final_answer, opt.scoring, &err);
            if (!err.empty()) p.result.error = "scoring: " + err;
        }
    } catch (const std::exception& e) {
        p.result.error = e.what();
    }
    p.result.wall_time_s = std::max(0.0, clock() - start);
    return p;
}

nlohmann::json event_json(const std::string& qid, const StepEvent& e) {
    return {{"question_id", qid}, {"attempt", e.attempt}, {"t", e.t}, {"role", e.role}, {"text", e.text}};
}

}  // namespace

BenchOutcome run_benchmark(std::span<const QARecord> dataset, const std::map<std::string, DomainResources>& domains,
                           const BackendFactory& backends, const BenchOptions& options) {
    if (options.workers < 1) throw ConfigError("workers must be >= 1");
    options.episode.validate();
    const auto clock = options.clock ? options.clock : std::function<double()>(steady_seconds);

    {
        std::unordered_set<std::string> ids;
        for (const auto& r : dataset) {
            if (!ids.insert(r.question_id).second) throw LoadError("duplicate question_id " + r.question_id);
        }
    }

    const bool persist = !options.out_dir.empty();
    const auto results_path = options.out_dir / "results.ndjson";
    const auto log_path = options.out_dir / "episodes.ndjson";

    std::map<std::string, ScoredResult> carried;
    if (persist && options.resume && std::filesystem::exists(results_path)) {
        for (auto& r : load_results(results_path, dataset)) carried.emplace(r.record.question_id, std::move(r));
    }

    std::ofstream results_out, log_out;
    if (persist) {
        std::filesystem::create_directories(options.out_dir);
        const auto mode = options.resume ? std::ios::app : std::ios::trunc;
        results_out.open(results_path, std::ios::out | mode);
        log_out.open(log_path, std::ios::out | mode);
        if (!results_out || !log_out) throw ConfigError("cannot write to output directory " + options.out_dir.string());
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!carried.count(dataset[i].question_id)) todo.push_back(i);
    }

    std::vector<std::optional<Pending>> done(todo.size());
    std::size_t next_commit = 0;
    std::mutex commit_mu;

    const auto n = static_cast<long>(todo.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(options.workers)
    for (long k = 0; k < n; ++k) {
        auto p = run_one(dataset[todo[static_cast<std::size_t>(k)]], domains, backends, options, clock);
        std::lock_guard lock(commit_mu);
        done[static_cast<std::size_t>(k)] = std::move(p);
        while (next_commit < done.size() && done[next_commit]) {
            const auto& c = *done[next_commit];
            if (persist) {
                results_out << result_to_json(c.result).dump() << '\n' << std::flush;
                for (const auto& e : c.events) log_out << event_json(c.result.record.question_id, e).dump() << '\n';
                log_out.flush();
            }
            ++next_commit;
        }
    }

    BenchOutcome out;
    out.skipped = carried.size();
    std::size_t k = 0;
    for (const auto& rec : dataset) {
        if (auto it = carried.find(rec.question_id); it != carried.end()) {
            out.results.push_back(it->second);
        } else {
            out.results.push_back(std::move(done[k++]->result));
        }
    }
    out.report = aggregate(out.results);

    if (persist) {
        std::ofstream(options.out_dir / "report.txt", std::ios::trunc) << format_report(out.report);
        std::ofstream(options.out_dir / "summary.json", std::ios::trunc) << report_to_json(out.report).dump(2) << '\n';
    }
    return out;
}

}  // namespace kgqa
