#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace kgqa {

/// Opaque node identifier. Compared by exact string equality.
struct NodeId {
    std::string value;

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Why a graph lookup produced nothing.
enum class Miss { unknown_node, unknown_feature };

/// Result of a read-only graph query: either a value or the reason for a miss.
template <class T>
class Lookup {
public:
    Lookup(T value) : v_(std::move(value)) {}
    Lookup(Miss miss) : v_(miss) {}

    bool has_value() const { return v_.index() == 0; }
    explicit operator bool() const { return has_value(); }
    const T& operator*() const { return std::get<0>(v_); }
    const T* operator->() const { return &std::get<0>(v_); }
    Miss miss() const { return std::get<1>(v_); }

private:
    std::variant<T, Miss> v_;
};

/// Feature-type names and edge labels in first-seen order.
struct GraphSchema {
    std::vector<std::string> feature_types;
    std::vector<std::string> edge_labels;
};

/// Immutable knowledge graph: identifier-keyed nodes with string features
/// and directed, labeled adjacency lists. Safe for concurrent reads.
class KnowledgeGraph {
public:
    using FeatureList = std::vector<std::pair<std::string, std::string>>;
    using AdjacencyList = std::vector<std::pair<std::string, std::vector<NodeId>>>;

    struct Node {
        NodeId id;
        FeatureList features;
        AdjacencyList edges;
    };

    KnowledgeGraph() = default;

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    bool contains(std::string_view id) const;

    /// Nodes in file order.
    std::span<const Node> nodes() const { return nodes_; }
    const Node* find(std::string_view id) const;

    const GraphSchema& schema() const { return schema_; }
    std::size_t edge_count() const;
    /// Number of (node, label) adjacency keys present.
    std::size_t adjacency_key_count() const;

    /// Non-fatal diagnostics collected at load (e.g. deduplicated neighbours).
    std::span<const std::string> warnings() const { return warnings_; }

private:
    friend class GraphBuilder;

    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    GraphSchema schema_;
    std::vector<std::string> warnings_;
};

/// Assembles a KnowledgeGraph and enforces its invariants on finish().
class GraphBuilder {
public:
    /// Throws LoadError on an empty or duplicate id.
    void add_node(std::string id, KnowledgeGraph::FeatureList features);
    /// Targets may be declared before their nodes; dangling ones fail in finish().
    void add_edges(std::string_view source, std::string label, std::vector<std::string> targets);
    void warn(std::string message);

    KnowledgeGraph finish() &&;

private:
    KnowledgeGraph g_;
    struct PendingEdges {
        std::string source;
        std::string label;
        std::vector<std::string> targets;
    };
    std::vector<PendingEdges> pending_;
};

std::string_view to_string(Miss miss);

Lookup<std::string_view> get_feature(const KnowledgeGraph& g, std::string_view node, std::string_view feature);

/// Empty span when the node exists but has no `label` edges.
Lookup<std::span<const NodeId>> get_neighbours(const KnowledgeGraph& g, std::string_view node,
                                               std::string_view label);

Lookup<std::size_t> get_degree(const KnowledgeGraph& g, std::string_view node, std::string_view label);

/// Parse a graph document. Accepts the canonical {"nodes", "edges"} form or
/// a GRBENCH-shaped document ({"<type>_nodes": {id: {features, neighbors}}}),
/// which is converted first. Throws LoadError naming the line or key path.
KnowledgeGraph parse_graph(std::string_view text);
KnowledgeGraph load_graph(const std::filesystem::path& path);

/// Build from an already-parsed canonical document.
KnowledgeGraph graph_from_json(const nlohmann::ordered_json& doc);

/// Map a GRBENCH-shaped document onto the canonical format. Neighbour ids
/// that name no node are dropped and reported through `warnings`.
nlohmann::ordered_json convert_grbench(const nlohmann::ordered_json& doc, std::vector<std::string>* warnings);
bool looks_like_grbench(const nlohmann::ordered_json& doc);

/// Canonical serialization; load(save(g)) reproduces g.
nlohmann::ordered_json graph_to_json(const KnowledgeGraph& g);

}  // namespace kgqa

template <>
struct std::hash<kgqa::NodeId> {
    std::size_t operator()(const kgqa::NodeId& id) const noexcept { return std::hash<std::string>{}(id.value); }
};
