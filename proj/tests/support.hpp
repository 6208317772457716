#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgqa/llm_gateway.hpp"
#include "kgqa/text.hpp"

namespace kgqa::testing {

inline std::filesystem::path source_dir() { return KGQA_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "fixtures"; }
inline std::filesystem::path prompts_dir(const std::string& domain) { return source_dir() / "prompts" / domain; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary | std::ios::trunc) << content;
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kgqa_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random canonical graph document: up to `max_nodes` nodes, a handful of
/// labels, occasional duplicate neighbours and nodes without edges.
inline std::string random_graph_text(std::mt19937& rng, int max_nodes) {
    std::uniform_int_distribution<int> n_dist(1, max_nodes);
    const int n = n_dist(rng);
    const std::vector<std::string> labels{"cites", "also-bought-item", "author_of", "Compound-treats-Disease"};
    const std::vector<std::string> words{"graph", "node", "alpha", "beta", "item", "shell", "white", "dermatitis"};
    nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
    nlohmann::ordered_json edges = nlohmann::ordered_json::object();
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i * 7 + 3));
    std::uniform_int_distribution<int> word(0, static_cast<int>(words.size()) - 1);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> coin(0, 9);
    for (const auto& id : ids) {
        nodes[id]["features"]["title"] = words[word(rng)] + " " + words[word(rng)] + " " + id;
        if (coin(rng) < 3) nodes[id]["features"]["price"] = "";
    }
    for (const auto& id : ids) {
        for (const auto& label : labels) {
            if (coin(rng) < 5) continue;
            nlohmann::ordered_json targets = nlohmann::ordered_json::array();
            const int k = coin(rng);
            for (int j = 0; j < k; ++j) targets.push_back(ids[pick(rng)]);
            if (k > 0 && coin(rng) < 2) targets.push_back(targets[0]);  // duplicate
            edges[id][label] = targets;
        }
    }
    return nlohmann::ordered_json{{"nodes", nodes}, {"edges", edges}}.dump();
}

/// Scans the raw document directly: first-occurrence-unique targets of
/// (node, label), or nullopt when the node is unknown.
inline std::optional<std::vector<std::string>> raw_neighbours(const nlohmann::json& doc, const std::string& node,
                                                              const std::string& label) {
    if (!doc["nodes"].contains(node)) return std::nullopt;
    std::vector<std::string> out;
    if (!doc["edges"].contains(node) || !doc["edges"][node].contains(label)) return out;
    for (const auto& t : doc["edges"][node][label]) {
        auto s = t.get<std::string>();
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

/// Textbook O(n*m) LCS table over token vectors.
inline std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
        }
    }
    return t[a.size()][b.size()];
}

/// What a reasoning-model prompt asks for, read off its trailing cue.
enum class Cue { plan, thought, action, judge, reflection, scoring, unknown };

inline Cue cue_of(const std::string& prompt) {
    auto tail = std::string_view(prompt).substr(prompt.size() > 40 ? prompt.size() - 40 : 0);
    if (tail.ends_with("Reflection:")) return Cue::reflection;
    if (tail.ends_with("judgment below:")) return Cue::judge;
    auto colon = tail.rfind(':');
    if (colon != std::string_view::npos && colon + 1 == tail.size()) {
        auto line_start = tail.rfind('\n', colon);
        auto line = tail.substr(line_start == std::string_view::npos ? 0 : line_start + 1);
        if (line.starts_with("Plan ")) return Cue::plan;
        if (line.starts_with("Thought ")) return Cue::thought;
        if (line.starts_with("Action ")) return Cue::action;
    }
    if (prompt.find("[yes]") != std::string::npos) return Cue::scoring;
    return Cue::unknown;
}

/// Backend that answers by cue and counts calls per cue.
class CueBackend final : public ChatBackend {
public:
    using Reply = std::function<std::string(Cue, const std::string& prompt, int call)>;
    explicit CueBackend(Reply reply) : reply_(std::move(reply)) {}
    std::string name() const override { return "cue"; }
    int count(Cue c) const {
        auto it = counts_.find(c);
        return it == counts_.end() ? 0 : it->second;
    }
    std::vector<Cue> sequence;
    std::vector<std::string> prompts;

protected:
    std::string do_complete(std::span<const ChatTurn> turns, const GenerationParams&) override {
        const auto& prompt = turns.back().content;
        const auto cue = cue_of(prompt);
        sequence.push_back(cue);
        prompts.push_back(prompt);
        return reply_(cue, prompt, ++counts_[cue]);
    }

private:
    Reply reply_;
    std::map<Cue, int> counts_;
};

}  // namespace kgqa::testing
