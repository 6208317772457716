#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgqa/graph_store.hpp"

namespace kgqa {

/// Corpus-wide statistics handed to every scorer call.
struct CorpusStats {
    std::size_t num_docs = 0;
    double avg_doc_len = 0.0;
    const std::unordered_map<std::string, std::size_t>* doc_freq = nullptr;

    std::size_t df(const std::string& term) const;
};

/// Text-similarity plug-in: (query tokens, document tokens, corpus stats) -> finite score.
/// Implementations must be deterministic and safe to call concurrently.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string name() const = 0;
    virtual double score(std::span<const std::string> query, std::span<const std::string> doc,
                         const CorpusStats& stats) const = 0;
};

/// Okapi BM25 with the non-negative (Lucene) idf. A document whose token
/// sequence equals the query's gets a bonus equal to the largest score any
/// document could reach for that query, so an exact full-text match always
/// ranks first.
class Bm25Scorer final : public Scorer {
public:
    explicit Bm25Scorer(double k1 = 1.2, double b = 0.75) : k1_(k1), b_(b) {}
    std::string name() const override { return "bm25"; }
    double score(std::span<const std::string> query, std::span<const std::string> doc,
                 const CorpusStats& stats) const override;
    double idf(std::size_t df, std::size_t num_docs) const;

private:
    double k1_;
    double b_;
};

/// Count of query tokens present in the document. Mostly useful in tests.
class OverlapScorer final : public Scorer {
public:
    std::string name() const override { return "overlap"; }
    double score(std::span<const std::string> query, std::span<const std::string> doc,
                 const CorpusStats& stats) const override;
};

/// Named scorer factories. "bm25" and "overlap" are registered up front.
class ScorerRegistry {
public:
    using Factory = std::function<std::shared_ptr<const Scorer>()>;

    static ScorerRegistry& global();

    void add(std::string name, Factory factory);
    /// Throws ConfigError for an unknown name.
    std::shared_ptr<const Scorer> make(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    ScorerRegistry();
    std::map<std::string, Factory> factories_;
};

struct RetrievalHit {
    NodeId node;
    double score = 0.0;

    friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

/// Immutable token index over one graph's nodes. Each node's document is the
/// concatenation of its values for the configured fields, in field order.
class RetrievalIndex {
public:
    std::size_t size() const { return ids_.size(); }
    const CorpusStats& stats() const { return stats_; }
    const Scorer& scorer() const { return *scorer_; }
    std::span<const std::string> fields() const { return fields_; }
    const NodeId& id(std::size_t doc) const { return ids_[doc]; }
    std::span<const std::string> tokens(std::size_t doc) const { return docs_[doc]; }

private:
    friend RetrievalIndex build_index(const KnowledgeGraph&, std::span<const std::string>,
                                      std::shared_ptr<const Scorer>);

    std::vector<NodeId> ids_;
    std::vector<std::vector<std::string>> docs_;
    std::vector<std::string> fields_;
    std::shared_ptr<std::unordered_map<std::string, std::size_t>> doc_freq_;
    CorpusStats stats_;
    std::shared_ptr<const Scorer> scorer_;
};

/// An empty `fields` list means every feature type in schema order.
/// Throws ConfigError when a named field is absent from the graph schema.
RetrievalIndex build_index(const KnowledgeGraph& g, std::span<const std::string> fields,
                           std::shared_ptr<const Scorer> scorer = nullptr);

// Scoring kernels: one score per indexed node, in index order. The serial
// version is the reference; the parallel one must agree with it exactly.
std::vector<double> score_all_serial(const RetrievalIndex& idx, std::span<const std::string> query_tokens);
std::vector<double> score_all_parallel(const RetrievalIndex& idx, std::span<const std::string> query_tokens,
                                       int threads = 0);

/// Highest-scoring node; ties go to the lexicographically smallest id.
/// nullopt when the index is empty or no node scores above zero.
/// Throws ArgumentError for a query that is blank after trimming.
std::optional<RetrievalHit> retrieve_top1(const RetrievalIndex& idx, std::string_view query);

/// Best k hits by (score desc, id asc); zero-score nodes are excluded.
std::vector<RetrievalHit> retrieve_top_k(const RetrievalIndex& idx, std::string_view query, std::size_t k);

}  // namespace kgqa
