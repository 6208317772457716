#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgqa/errors.hpp"
#include "kgqa/graph_store.hpp"
#include "kgqa/retrieval.hpp"

namespace kgqa {

// Action language emitted by the execution role:
//
//   list   := expr ( ',' expr )*
//   expr   := Retrieve[text] | Finish[text]
//           | Feature[target, name] | Neighbour[target, label] | Degree[target, label]
//   target := node-id | Retrieve[text]
//
// Function names are case-insensitive and "Neighbor" is accepted for
// "Neighbour". At most two functions compose, and only Retrieve may sit in
// the inner position because it is the only one that yields a node id.

struct RetrieveExpr {
    std::string query;
    friend bool operator==(const RetrieveExpr&, const RetrieveExpr&) = default;
};

/// A node id written literally or produced by a nested Retrieve.
using Target = std::variant<NodeId, RetrieveExpr>;

struct FeatureExpr {
    Target target;
    std::string feature;
    friend bool operator==(const FeatureExpr&, const FeatureExpr&) = default;
};

struct NeighbourExpr {
    Target target;
    std::string label;
    friend bool operator==(const NeighbourExpr&, const NeighbourExpr&) = default;
};

struct DegreeExpr {
    Target target;
    std::string label;
    friend bool operator==(const DegreeExpr&, const DegreeExpr&) = default;
};

struct FinishExpr {
    std::string answer;
    friend bool operator==(const FinishExpr&, const FinishExpr&) = default;
};

using ActionExpr = std::variant<RetrieveExpr, FeatureExpr, NeighbourExpr, DegreeExpr, FinishExpr>;
using ActionList = std::vector<ActionExpr>;

/// Parse failure. what() is phrased as guidance for the model, so the
/// orchestrator can feed it back verbatim as an observation.
class ActionParseError : public Error {
public:
    using Error::Error;
};

inline constexpr std::string_view kInvalidFunctionMessage =
    "Invalid function name. Valid functions are Retrieve, Feature, Degree, Neighbour, Finish.";
inline constexpr std::string_view kMissMessage =
    "The node or feature name does not exist in the graph. This might because your given feature name is not "
    "correct. Please modify it.";

/// Throws ActionParseError.
ActionList parse_actions(std::string_view raw);

std::string render(const ActionExpr& expr);
std::string render(const ActionList& list);

bool is_finish(const ActionList& list);

struct Observation {
    enum class Outcome { ok, advisory };

    std::string text;
    Outcome outcome = Outcome::ok;

    bool ok() const { return outcome == Outcome::ok; }
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct EvalOptions {
    /// Neighbour lists longer than this are cut and annotated with the total.
    std::size_t neighbour_cap = 50;
};

/// Read-only view of what actions are evaluated against.
struct GraphEnv {
    const KnowledgeGraph& graph;
    const RetrievalIndex& index;
};

/// Never throws; every failure becomes an advisory observation. Compound
/// expressions prefix the inner Retrieve sentence to the outer result.
Observation eval_action(const GraphEnv& env, const ActionExpr& expr, const EvalOptions& opts = {});

/// Left-to-right evaluation, observation texts joined by one space.
Observation eval_action_list(const GraphEnv& env, const ActionList& list, const EvalOptions& opts = {});

}  // namespace kgqa
