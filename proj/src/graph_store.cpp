#include "kgqa/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "kgqa/errors.hpp"

namespace kgqa {

using ojson = nlohmann::ordered_json;

namespace {

void note_unique(std::vector<std::string>& seen, const std::string& name) {
    if (std::find(seen.begin(), seen.end(), name) == seen.end()) seen.push_back(name);
}

std::string scalar_to_string(const ojson& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
    throw LoadError("graph: " + path + ": " + what);
}

}  // namespace

// --- KnowledgeGraph ---------------------------------------------------------

bool KnowledgeGraph::contains(std::string_view id) const { return find(id) != nullptr; }

const KnowledgeGraph::Node* KnowledgeGraph::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::size_t KnowledgeGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes_)
        for (const auto& [label, targets] : node.edges) n += targets.size();
    return n;
}

std::size_t KnowledgeGraph::adjacency_key_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.edges.size();
    return n;
}

// --- GraphBuilder -----------------------------------------------------------

void GraphBuilder::add_node(std::string id, KnowledgeGraph::FeatureList features) {
    if (id.empty()) throw LoadError("graph: node id must be non-empty");
    if (g_.index_.count(id) != 0) throw LoadError("graph: duplicate node id '" + id + "'");
    for (const auto& [name, value] : features) note_unique(g_.schema_.feature_types, name);
    g_.index_.emplace(id, g_.nodes_.size());
    g_.nodes_.push_back({NodeId{std::move(id)}, std::move(features), {}});
}

void GraphBuilder::add_edges(std::string_view source, std::string label, std::vector<std::string> targets) {
    if (label.empty()) throw LoadError("graph: edges of '" + std::string(source) + "' use an empty label");
    pending_.push_back({std::string(source), std::move(label), std::move(targets)});
}

void GraphBuilder::warn(std::string message) { g_.warnings_.push_back(std::move(message)); }

KnowledgeGraph GraphBuilder::finish() && {
    std::vector<std::string> dangling;
    for (auto& pe : pending_) {
        auto src_it = g_.index_.find(pe.source);
        if (src_it == g_.index_.end()) {
            throw LoadError("graph: edges declared for unknown source node '" + pe.source + "'");
        }
        auto& node = g_.nodes_[src_it->second];
        auto slot = std::find_if(node.edges.begin(), node.edges.end(),
                                 [&](const auto& e) { return e.first == pe.label; });
        if (slot == node.edges.end()) {
            node.edges.emplace_back(pe.label, std::vector<NodeId>{});
            slot = std::prev(node.edges.end());
        }
        note_unique(g_.schema_.edge_labels, pe.label);

        std::unordered_set<std::string> seen;
        for (const auto& t : slot->second) seen.insert(t.value);
        for (auto& target : pe.targets) {
            if (g_.index_.count(target) == 0) {
                dangling.push_back("(" + pe.source + ", " + pe.label + ", " + target + ")");
                continue;
            }
            if (!seen.insert(target).second) {
                g_.warnings_.push_back("duplicate neighbour " + target + " in " + pe.source + "/" + pe.label +
                                       " dropped");
                continue;
            }
            slot->second.push_back(NodeId{std::move(target)});
        }
    }
    pending_.clear();

    if (!dangling.empty()) {
        std::ostringstream msg;
        msg << "graph: " << dangling.size() << " dangling neighbour reference(s) (source, label, target):";
        constexpr std::size_t shown = 20;
        for (std::size_t i = 0; i < dangling.size() && i < shown; ++i) msg << ' ' << dangling[i];
        if (dangling.size() > shown) msg << " ...";
        throw LoadError(msg.str());
    }
    return std::move(g_);
}

// --- queries ----------------------------------------------------------------

std::string_view to_string(Miss miss) {
    return miss == Miss::unknown_node ? "unknown node" : "unknown feature";
}

Lookup<std::string_view> get_feature(const KnowledgeGraph& g, std::string_view node, std::string_view feature) {
    const auto* n = g.find(node);
    if (n == nullptr) return Miss::unknown_node;
    for (const auto& [name, value] : n->features) {
        if (name == feature) return std::string_view(value);
    }
    return Miss::unknown_feature;
}

Lookup<std::span<const NodeId>> get_neighbours(const KnowledgeGraph& g, std::string_view node,
                                               std::string_view label) {
    const auto* n = g.find(node);
    if (n == nullptr) return Miss::unknown_node;
    for (const auto& [l, targets] : n->edges) {
        if (l == label) return std::span<const NodeId>(targets);
    }
    return std::span<const NodeId>{};
}

Lookup<std::size_t> get_degree(const KnowledgeGraph& g, std::string_view node, std::string_view label) {
    auto nb = get_neighbours(g, node, label);
    if (!nb) return nb.miss();
    return nb->size();
}

// --- loading ----------------------------------------------------------------

namespace {

KnowledgeGraph build_graph(const ojson& doc, std::vector<std::string> carried_warnings) {
    if (!doc.is_object()) fail_at("<root>", "expected an object");
    if (!doc.contains("nodes")) fail_at("<root>", "missing \"nodes\"");
    const auto& nodes = doc.at("nodes");
    if (!nodes.is_object()) fail_at("nodes", "expected an object");

    GraphBuilder b;
    for (auto& w : carried_warnings) b.warn(std::move(w));
    for (const auto& [id, body] : nodes.items()) {
        const std::string path = "nodes." + id;
        if (id.empty()) fail_at(path, "node id must be non-empty");
        if (!body.is_object()) fail_at(path, "expected an object");
        KnowledgeGraph::FeatureList features;
        if (body.contains("features")) {
            const auto& fs = body.at("features");
            if (!fs.is_object()) fail_at(path + ".features", "expected an object");
            for (const auto& [name, value] : fs.items()) {
                if (value.is_object() || value.is_array()) {
                    fail_at(path + ".features." + name, "feature values must be scalars");
                }
                features.emplace_back(name, scalar_to_string(value));
            }
        }
        b.add_node(id, std::move(features));
    }

    if (doc.contains("edges")) {
        const auto& edges = doc.at("edges");
        if (!edges.is_object()) fail_at("edges", "expected an object");
        for (const auto& [src, labels] : edges.items()) {
            const std::string path = "edges." + src;
            if (!nodes.contains(src)) fail_at(path, "source node is not declared in \"nodes\"");
            if (!labels.is_object()) fail_at(path, "expected an object of label -> [ids]");
            for (const auto& [label, targets] : labels.items()) {
                if (label.empty()) fail_at(path, "empty edge label");
                if (!targets.is_array()) fail_at(path + "." + label, "expected an array of node ids");
                std::vector<std::string> ids;
                ids.reserve(targets.size());
                for (const auto& t : targets) {
                    if (!t.is_string() && !t.is_number_integer()) {
                        fail_at(path + "." + label, "neighbour ids must be strings");
                    }
                    ids.push_back(scalar_to_string(t));
                }
                b.add_edges(src, label, std::move(ids));
            }
        }
    }
    return std::move(b).finish();
}

}  // namespace

KnowledgeGraph graph_from_json(const ojson& doc) { return build_graph(doc, {}); }

bool looks_like_grbench(const ojson& doc) {
    if (!doc.is_object() || doc.empty() || doc.contains("nodes")) return false;
    for (const auto& [key, value] : doc.items()) {
        if (key.size() < 6 || key.compare(key.size() - 6, 6, "_nodes") != 0 || !value.is_object()) return false;
    }
    return true;
}

ojson convert_grbench(const ojson& doc, std::vector<std::string>* warnings) {
    if (!looks_like_grbench(doc)) throw LoadError("graph: document is not GRBENCH-shaped");
    std::unordered_set<std::string> ids;
    for (const auto& [type, members] : doc.items()) {
        for (const auto& [id, body] : members.items()) {
            if (!ids.insert(id).second) {
                throw LoadError("graph: " + type + "." + id + ": id collides with a node of another type");
            }
        }
    }

    ojson out = {{"nodes", ojson::object()}, {"edges", ojson::object()}};
    std::size_t dropped = 0;
    for (const auto& [type, members] : doc.items()) {
        for (const auto& [id, body] : members.items()) {
            ojson features = ojson::object();
            if (body.is_object() && body.contains("features")) {
                for (const auto& [name, value] : body.at("features").items()) {
                    features[name] = value.is_array() || value.is_object() ? ojson(value.dump()) : value;
                }
            }
            out["nodes"][id] = {{"features", std::move(features)}};
            if (!body.is_object() || !body.contains("neighbors")) continue;
            ojson labels = ojson::object();
            for (const auto& [label, targets] : body.at("neighbors").items()) {
                ojson kept = ojson::array();
                for (const auto& t : targets) {
                    auto tid = scalar_to_string(t);
                    if (ids.count(tid) == 0) {
                        ++dropped;
                        continue;
                    }
                    kept.push_back(tid);
                }
                labels[label] = std::move(kept);
            }
            out["edges"][id] = std::move(labels);
        }
    }
    if (dropped > 0 && warnings != nullptr) {
        warnings->push_back("grbench conversion dropped " + std::to_string(dropped) +
                            " neighbour reference(s) to undeclared nodes");
    }
    return out;
}

KnowledgeGraph parse_graph(std::string_view text) {
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError("graph: line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                        ": malformed document (" + e.what() + ")");
    }
    if (looks_like_grbench(doc)) {
        std::vector<std::string> warnings;
        auto canonical = convert_grbench(doc, &warnings);
        return build_graph(canonical, std::move(warnings));
    }
    return graph_from_json(doc);
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("graph: cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_graph(buf.str());
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

ojson graph_to_json(const KnowledgeGraph& g) {
    ojson out = {{"nodes", ojson::object()}, {"edges", ojson::object()}};
    for (const auto& node : g.nodes()) {
        ojson features = ojson::object();
        for (const auto& [name, value] : node.features) features[name] = value;
        out["nodes"][node.id.value] = {{"features", std::move(features)}};
        if (node.edges.empty()) continue;
        ojson labels = ojson::object();
        for (const auto& [label, targets] : node.edges) {
            ojson ids = ojson::array();
            for (const auto& t : targets) ids.push_back(t.value);
            labels[label] = std::move(ids);
        }
        out["edges"][node.id.value] = std::move(labels);
    }
    return out;
}

}  // namespace kgqa
