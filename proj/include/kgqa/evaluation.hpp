#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgqa/llm_gateway.hpp"
#include "kgqa/prompt_catalog.hpp"

namespace kgqa {

enum class Difficulty { simple, medium, hard };

std::string_view to_string(Difficulty d);
/// Case-insensitive; throws LoadError on anything else.
Difficulty parse_difficulty(std::string_view s);

struct QARecord {
    std::string question_id;
    std::string question;
    std::string gold_answer;
    /// Free-form domain key, e.g. "amazon" or "Healthcare".
    std::string domain;
    Difficulty difficulty = Difficulty::simple;

    friend bool operator==(const QARecord&, const QARecord&) = default;
};

struct ScoredResult {
    QARecord record;
    std::optional<std::string> predicted;
    double rouge_l = 0.0;
    std::optional<bool> judge_verdict;
    double wall_time_s = 0.0;
    int attempts_used = 0;
    /// Non-empty when the episode failed; the record still counts with RL 0.
    std::string error;

    friend bool operator==(const ScoredResult&, const ScoredResult&) = default;
};

/// Token-level longest common subsequence.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// LCS(pred, ref) / |ref| over text::tokenize tokens. 0 for an empty
/// prediction or a reference with no tokens.
double rouge_l(std::string_view pred, std::string_view ref);

/// Grades `predicted` against the gold answer with the catalog's scoring
/// prompt. nullopt when there is no prediction or the backend fails.
std::optional<bool> llm_judge_score(ChatBackend& backend, const PromptCatalog& catalog, const QARecord& record,
                                    const std::optional<std::string>& predicted, const GenerationParams& params,
                                    std::string* error = nullptr);

/// Running sums for one report cell. Adding results in any grouping and
/// merging gives the same sums as adding them one by one.
struct Accumulator {
    std::size_t count = 0;
    double rouge_sum = 0.0;
    std::size_t judged = 0;
    std::size_t judged_true = 0;
    double wall_sum = 0.0;
    long long attempts_sum = 0;
    std::size_t failures = 0;

    void add(const ScoredResult& r);
    void merge(const Accumulator& other);

    std::size_t unjudged() const { return count - judged; }
    /// Mean Rouge-L x 100; 0 when empty.
    double mean_rouge() const;
    /// Percent of judged records with a true verdict; 0 when none judged.
    double judge_percent() const;
    double mean_wall_s() const;
    double mean_attempts() const;
};

struct Report {
    /// Keyed by (domain, difficulty).
    std::map<std::pair<std::string, std::string>, Accumulator> cells;
    Accumulator overall;
};

Report aggregate(std::span<const ScoredResult> results);
/// Fixed-width text table, one row per cell plus an overall row.
std::string format_report(const Report& report);
nlohmann::json report_to_json(const Report& report);

/// Newline-delimited {question_id, question, answer, domain, difficulty}.
/// Blank lines are skipped; errors name the line.
std::vector<QARecord> parse_dataset(std::istream& in);
std::vector<QARecord> load_dataset(const std::filesystem::path& path);

/// {question_id, predicted, rouge_l, judge_verdict, wall_time_s,
/// attempts_used} plus domain, difficulty and error for self-contained
/// rescoring. Absent values are null.
nlohmann::json result_to_json(const ScoredResult& r);
/// Joins a results line back to its dataset record.
ScoredResult result_from_json(const nlohmann::json& line, const QARecord& record);

/// Reads a results file and joins every line to `dataset` by question_id.
/// Throws LoadError for unknown ids or malformed lines.
std::vector<ScoredResult> load_results(const std::filesystem::path& path, std::span<const QARecord> dataset);

/// Recomputes Rouge-L from the persisted predictions and aggregates.
Report rescore(std::span<const ScoredResult> persisted);

}  // namespace kgqa
