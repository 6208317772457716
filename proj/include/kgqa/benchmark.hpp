#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kgqa/evaluation.hpp"
#include "kgqa/graph_store.hpp"
#include "kgqa/orchestrator.hpp"
#include "kgqa/retrieval.hpp"

namespace kgqa {

/// Immutable per-domain inputs, shared by every concurrent episode.
struct DomainResources {
    const KnowledgeGraph* graph = nullptr;
    const RetrievalIndex* index = nullptr;
    const PromptCatalog* catalog = nullptr;
};

/// Backends for one record. `scorer` may be null, which leaves
/// judge_verdict absent.
struct BackendSet {
    std::shared_ptr<ChatBackend> reasoning;
    std::shared_ptr<ChatBackend> judge;
    std::shared_ptr<ChatBackend> reflect;
    std::shared_ptr<ChatBackend> scorer;
};

/// Called once per record, possibly from several threads at once.
using BackendFactory = std::function<BackendSet(const QARecord&)>;

struct BenchOptions {
    EpisodeConfig episode;
    GenerationParams scoring{0.0, 1.0, 256, {}};
    int workers = 1;
    /// Empty: nothing is written.
    std::filesystem::path out_dir;
    /// Skip question_ids already present in out_dir/results.ndjson.
    bool resume = false;
    /// Seconds since an arbitrary epoch; defaults to a steady clock.
    std::function<double()> clock;
};

struct BenchOutcome {
    /// Dataset order, including records carried over by resume.
    std::vector<ScoredResult> results;
    Report report;
    std::size_t skipped = 0;
};

/// Runs every record through run_episode and scores it. Per-record
/// failures are captured in ScoredResult::error. Results, episode logs,
/// report.txt and summary.json land in out_dir; result and log lines are
/// appended in dataset order whatever the worker count.
BenchOutcome run_benchmark(std::span<const QARecord> dataset, const std::map<std::string, DomainResources>& domains,
                           const BackendFactory& backends, const BenchOptions& options);

}  // namespace kgqa
