#include "kgqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa {

namespace {

// Below this many documents the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelThreshold = 4096;

bool better(double a_score, const NodeId& a, double b_score, const NodeId& b) {
    if (a_score != b_score) return a_score > b_score;
    return a < b;
}

double sanitize(double s) { return std::isfinite(s) ? s : 0.0; }

}  // namespace

std::size_t CorpusStats::df(const std::string& term) const {
    if (doc_freq == nullptr) return 0;
    auto it = doc_freq->find(term);
    return it == doc_freq->end() ? 0 : it->second;
}

// --- scorers ----------------------------------------------------------------

double Bm25Scorer::idf(std::size_t df, std::size_t num_docs) const {
    const double n = static_cast<double>(num_docs);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Bm25Scorer::score(std::span<const std::string> query, std::span<const std::string> doc,
                         const CorpusStats& stats) const {
    if (query.empty() || doc.empty()) return 0.0;
    const double avg = stats.avg_doc_len > 0.0 ? stats.avg_doc_len : 1.0;
    const double norm = 1.0 - b_ + b_ * static_cast<double>(doc.size()) / avg;

    double total = 0.0;
    double ceiling = 0.0;
    for (const auto& term : query) {
        const double w = idf(stats.df(term), stats.num_docs);
        ceiling += w * (k1_ + 1.0);
        const auto tf = static_cast<double>(std::count(doc.begin(), doc.end(), term));
        if (tf > 0.0) total += w * tf * (k1_ + 1.0) / (tf + k1_ * norm);
    }
    if (std::equal(query.begin(), query.end(), doc.begin(), doc.end())) total += ceiling;
    return total;
}

double OverlapScorer::score(std::span<const std::string> query, std::span<const std::string> doc,
                            const CorpusStats&) const {
    double hits = 0.0;
    for (const auto& term : query) {
        if (std::find(doc.begin(), doc.end(), term) != doc.end()) hits += 1.0;
    }
    return hits;
}

ScorerRegistry::ScorerRegistry() {
    factories_["bm25"] = [] { return std::make_shared<const Bm25Scorer>(); };
    factories_["overlap"] = [] { return std::make_shared<const OverlapScorer>(); };
}

ScorerRegistry& ScorerRegistry::global() {
    static ScorerRegistry registry;
    return registry;
}

void ScorerRegistry::add(std::string name, Factory factory) { factories_[std::move(name)] = std::move(factory); }

std::shared_ptr<const Scorer> ScorerRegistry::make(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown retrieval scorer '" + name + "'");
    return it->second();
}

std::vector<std::string> ScorerRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
}

// --- index ------------------------------------------------------------------

RetrievalIndex build_index(const KnowledgeGraph& g, std::span<const std::string> fields,
                           std::shared_ptr<const Scorer> scorer) {
    RetrievalIndex idx;
    const auto& schema = g.schema().feature_types;
    if (fields.empty()) {
        idx.fields_ = schema;
    } else {
        for (const auto& f : fields) {
            if (std::find(schema.begin(), schema.end(), f) == schema.end()) {
                throw ConfigError("retrieval field '" + f + "' is not a feature type of the graph");
            }
            idx.fields_.push_back(f);
        }
    }
    idx.scorer_ = scorer ? std::move(scorer) : std::make_shared<const Bm25Scorer>();

    idx.doc_freq_ = std::make_shared<std::unordered_map<std::string, std::size_t>>();
    idx.ids_.reserve(g.size());
    idx.docs_.reserve(g.size());
    std::size_t total_len = 0;
    for (const auto& node : g.nodes()) {
        std::vector<std::string> doc;
        for (const auto& field : idx.fields_) {
            auto value = get_feature(g, node.id.value, field);
            if (!value) continue;
            auto toks = text::tokenize(*value);
            doc.insert(doc.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
        }
        auto uniq = doc;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto& t : uniq) ++(*idx.doc_freq_)[t];
        total_len += doc.size();
        idx.ids_.push_back(node.id);
        idx.docs_.push_back(std::move(doc));
    }
    idx.stats_.num_docs = idx.ids_.size();
    idx.stats_.avg_doc_len =
        idx.ids_.empty() ? 0.0 : static_cast<double>(total_len) / static_cast<double>(idx.ids_.size());
    idx.stats_.doc_freq = idx.doc_freq_.get();
    return idx;
}

// --- kernels ----------------------------------------------------------------

std::vector<double> score_all_serial(const RetrievalIndex& idx, std::span<const std::string> query_tokens) {
    std::vector<double> scores(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        scores[i] = sanitize(idx.scorer().score(query_tokens, idx.tokens(i), idx.stats()));
    }
    return scores;
}

std::vector<double> score_all_parallel(const RetrievalIndex& idx, std::span<const std::string> query_tokens,
                                       int threads) {
    std::vector<double> scores(idx.size());
    const auto n = static_cast<std::ptrdiff_t>(idx.size());
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto d = static_cast<std::size_t>(i);
        scores[d] = sanitize(idx.scorer().score(query_tokens, idx.tokens(d), idx.stats()));
    }
    return scores;
}

namespace {

std::vector<std::string> query_tokens_of(std::string_view query) {
    if (text::trim(query).empty()) throw ArgumentError("retrieval query is empty");
    return text::tokenize(query);
}

std::vector<double> score_all(const RetrievalIndex& idx, std::span<const std::string> q) {
    return idx.size() >= kParallelThreshold ? score_all_parallel(idx, q) : score_all_serial(idx, q);
}

}  // namespace

std::optional<RetrievalHit> retrieve_top1(const RetrievalIndex& idx, std::string_view query) {
    auto q = query_tokens_of(query);
    if (idx.size() == 0 || q.empty()) return std::nullopt;
    const auto scores = score_all(idx, q);

    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (better(scores[i], idx.id(i), scores[best], idx.id(best))) best = i;
    }
    if (!(scores[best] > 0.0)) return std::nullopt;
    return RetrievalHit{idx.id(best), scores[best]};
}

std::vector<RetrievalHit> retrieve_top_k(const RetrievalIndex& idx, std::string_view query, std::size_t k) {
    auto q = query_tokens_of(query);
    std::vector<RetrievalHit> hits;
    if (idx.size() == 0 || q.empty() || k == 0) return hits;
    const auto scores = score_all(idx, q);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > 0.0) hits.push_back({idx.id(i), scores[i]});
    }
    auto cmp = [](const RetrievalHit& a, const RetrievalHit& b) { return better(a.score, a.node, b.score, b.node); };
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), cmp);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), cmp);
    }
    return hits;
}

}  // namespace kgqa
