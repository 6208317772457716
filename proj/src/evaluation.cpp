#include "kgqa/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "kgqa/errors.hpp"
#include "kgqa/orchestrator.hpp"
#include "kgqa/text.hpp"

namespace kgqa {

std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::simple: return "simple";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
    }
    return "simple";
}

Difficulty parse_difficulty(std::string_view s) {
    const auto t = text::trim(s);
    if (text::iequals(t, "simple") || text::iequals(t, "easy")) return Difficulty::simple;
    if (text::iequals(t, "medium")) return Difficulty::medium;
    if (text::iequals(t, "hard")) return Difficulty::hard;
    throw LoadError("unknown difficulty '" + std::string(t) + "' (expected simple, medium or hard)");
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (const auto& x : a) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
            diag = up;
        }
    }
    return row[b.size()];
}

double rouge_l(std::string_view pred, std::string_view ref) {
    const auto r = text::tokenize(ref);
    const auto p = text::tokenize(pred);
    if (r.empty() || p.empty()) return 0.0;
    const double score = static_cast<double>(lcs_length(p, r)) / static_cast<double>(r.size());
    return std::clamp(score, 0.0, 1.0);
}

std::optional<bool> llm_judge_score(ChatBackend& backend, const PromptCatalog& catalog, const QARecord& record,
                                    const std::optional<std::string>& predicted, const GenerationParams& params,
                                    std::string* error) {
    if (!predicted) return std::nullopt;
    const auto tmpl = catalog.scoring.empty() ? std::string(default_scoring_template()) : catalog.scoring;
    const std::vector<ChatTurn> turns{{Role::user, text::fill(tmpl, {{"question", record.question},
                                                                     {"gold", record.gold_answer},
                                                                     {"predicted", *predicted}})}};
    try {
        return parse_verdict(backend.complete(turns, params));
    } catch (const Error& e) {
        if (error != nullptr) *error = e.what();
        return std::nullopt;
    }
}

// --- aggregation ------------------------------------------------------------

void Accumulator::add(const ScoredResult& r) {
    ++count;
    rouge_sum += r.rouge_l;
    if (r.judge_verdict) {
        ++judged;
        if (*r.judge_verdict) ++judged_true;
    }
    wall_sum += r.wall_time_s;
    attempts_sum += r.attempts_used;
    if (!r.error.empty()) ++failures;
}

void Accumulator::merge(const Accumulator& o) {
    count += o.count;
    rouge_sum += o.rouge_sum;
    judged += o.judged;
    judged_true += o.judged_true;
    wall_sum += o.wall_sum;
    attempts_sum += o.attempts_sum;
    failures += o.failures;
}

double Accumulator::mean_rouge() const { return count ? 100.0 * rouge_sum / static_cast<double>(count) : 0.0; }
double Accumulator::judge_percent() const {
    return judged ? 100.0 * static_cast<double>(judged_true) / static_cast<double>(judged) : 0.0;
}
double Accumulator::mean_wall_s() const { return count ? wall_sum / static_cast<double>(count) : 0.0; }
double Accumulator::mean_attempts() const {
    return count ? static_cast<double>(attempts_sum) / static_cast<double>(count) : 0.0;
}

Report aggregate(std::span<const ScoredResult> results) {
    Report rep;
    for (const auto& r : results) {
        rep.cells[{r.record.domain, std::string(to_string(r.record.difficulty))}].add(r);
        rep.overall.add(r);
    }
    return rep;
}

namespace {

std::string row(std::string_view domain, std::string_view difficulty, const Accumulator& a) {
    char judge[16] = "-";
    if (a.judged) std::snprintf(judge, sizeof judge, "%.2f", a.judge_percent());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16.16s %-10.10s %6zu %8.2f %8s %7zu %9zu %9.3f %9.2f %8zu\n",
                  std::string(domain).c_str(), std::string(difficulty).c_str(), a.count, a.mean_rouge(), judge,
                  a.judged, a.unjudged(), a.mean_wall_s(), a.mean_attempts(), a.failures);
    return buf;
}

nlohmann::json cell_json(const Accumulator& a) {
    return {
        {"count", a.count},         {"rouge_l", a.mean_rouge()},       {"judge_percent", a.judged ? nlohmann::json(a.judge_percent()) : nlohmann::json()},
        {"judged", a.judged},       {"unjudged", a.unjudged()},        {"mean_wall_time_s", a.mean_wall_s()},
        {"mean_attempts", a.mean_attempts()}, {"failures", a.failures},
    };
}

}  // namespace

std::string format_report(const Report& report) {
    std::string out;
    char head[256];
    std::snprintf(head, sizeof head, "%-16s %-10s %6s %8s %8s %7s %9s %9s %9s %8s\n", "domain", "difficulty", "n",
                  "RL", "judge%", "judged", "unjudged", "wall_s", "attempts", "failures");
    out += head;
    for (const auto& [key, acc] : report.cells) out += row(key.first, key.second, acc);
    out += row("overall", "-", report.overall);
    if (report.overall.failures > 0) {
        out += std::to_string(report.overall.failures) + " record(s) failed; see the error field in the results file\n";
    }
    return out;
}

nlohmann::json report_to_json(const Report& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, acc] : report.cells) {
        auto c = cell_json(acc);
        c["domain"] = key.first;
        c["difficulty"] = key.second;
        cells.push_back(std::move(c));
    }
    return {{"cells", std::move(cells)}, {"overall", cell_json(report.overall)}};
}

// --- files ------------------------------------------------------------------

namespace {

std::string required_string(const nlohmann::json& doc, const char* key, std::size_t line) {
    if (!doc.contains(key) || !doc[key].is_string()) {
        throw LoadError("line " + std::to_string(line) + ": field \"" + key + "\" must be a string");
    }
    return doc[key].get<std::string>();
}

}  // namespace

std::vector<QARecord> parse_dataset(std::istream& in) {
    std::vector<QARecord> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (text::trim(line).empty()) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw LoadError("line " + std::to_string(n) + ": not a JSON object");
        QARecord r;
        r.question_id = required_string(doc, "question_id", n);
        r.question = required_string(doc, "question", n);
        r.gold_answer = required_string(doc, "answer", n);
        r.domain = required_string(doc, "domain", n);
        const auto difficulty = required_string(doc, "difficulty", n);
        try {
            r.difficulty = parse_difficulty(difficulty);
        } catch (const LoadError& e) {
            throw LoadError("line " + std::to_string(n) + ": " + e.what());
        }
        if (text::trim(r.question).empty() || text::trim(r.gold_answer).empty()) {
            throw LoadError("line " + std::to_string(n) + ": question and answer must be non-empty");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<QARecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open dataset " + path.string());
    try {
        return parse_dataset(in);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

nlohmann::json result_to_json(const ScoredResult& r) {
    nlohmann::json out = {
        {"question_id", r.record.question_id},
        {"predicted", r.predicted ? nlohmann::json(*r.predicted) : nlohmann::json(nullptr)},
        {"rouge_l", r.rouge_l},
        {"judge_verdict", r.judge_verdict ? nlohmann::json(*r.judge_verdict) : nlohmann::json(nullptr)},
        {"wall_time_s", r.wall_time_s},
        {"attempts_used", r.attempts_used},
        {"domain", r.record.domain},
        {"difficulty", to_string(r.record.difficulty)},
    };
    if (!r.error.empty()) out["error"] = r.error;
    return out;
}

ScoredResult result_from_json(const nlohmann::json& line, const QARecord& record) {
    ScoredResult r;
    r.record = record;
    try {
        if (!line.at("predicted").is_null()) r.predicted = line.at("predicted").get<std::string>();
        r.rouge_l = line.at("rouge_l").get<double>();
        if (!line.at("judge_verdict").is_null()) r.judge_verdict = line.at("judge_verdict").get<bool>();
        r.wall_time_s = line.at("wall_time_s").get<double>();
        r.attempts_used = line.at("attempts_used").get<int>();
        if (line.contains("error")) r.error = line["error"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("results line for " + record.question_id + ": " + e.what());
    }
    return r;
}

std::vector<ScoredResult> load_results(const std::filesystem::path& path, std::span<const QARecord> dataset) {
    std::unordered_map<std::string, const QARecord*> by_id;
    for (const auto& r : dataset) by_id.emplace(r.question_id, &r);

    std::ifstream in(path);
    if (!in) throw LoadError("cannot open results file " + path.string());
    std::vector<ScoredResult> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (text::trim(line).empty()) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("question_id") || !doc["question_id"].is_string()) {
            throw LoadError(path.string() + ":" + std::to_string(n) + ": malformed results line");
        }
        auto it = by_id.find(doc["question_id"].get<std::string>());
        if (it == by_id.end()) {
            throw LoadError(path.string() + ":" + std::to_string(n) + ": question_id " +
                            doc["question_id"].get<std::string>() + " is not in the dataset");
        }
        out.push_back(result_from_json(doc, *it->second));
    }
    return out;
}

Report rescore(std::span<const ScoredResult> persisted) {
    std::vector<ScoredResult> fresh(persisted.begin(), persisted.end());
    for (auto& r : fresh) r.rouge_l = r.predicted ? rouge_l(*r.predicted, r.record.gold_answer) : 0.0;
    return aggregate(fresh);
}

}  // namespace kgqa
