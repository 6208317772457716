#include "kgqa/action_lang.hpp"

#include <cctype>
#include <optional>

#include "kgqa/text.hpp"

namespace kgqa {

namespace {

enum class Fn { retrieve, feature, neighbour, degree, finish };

std::optional<Fn> function_named(std::string_view name) {
    using text::iequals;
    if (iequals(name, "Retrieve")) return Fn::retrieve;
    if (iequals(name, "Feature")) return Fn::feature;
    if (iequals(name, "Neighbour") || iequals(name, "Neighbor")) return Fn::neighbour;
    if (iequals(name, "Degree")) return Fn::degree;
    if (iequals(name, "Finish")) return Fn::finish;
    return std::nullopt;
}

std::string_view canonical_name(Fn fn) {
    switch (fn) {
        case Fn::retrieve: return "Retrieve";
        case Fn::feature: return "Feature";
        case Fn::neighbour: return "Neighbour";
        case Fn::degree: return "Degree";
        case Fn::finish: return "Finish";
    }
    return {};
}

[[noreturn]] void fail(std::string message) { throw ActionParseError(std::move(message)); }

/// Leading identifier of a "Name[" call form, or empty.
std::string_view call_name(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) != 0 || s[i] == '_')) ++i;
    if (i == 0) return {};
    std::size_t j = i;
    while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
    if (j >= s.size() || s[j] != '[') return {};
    return s.substr(0, i);
}

/// True when `s` is written as a call to one of the five functions.
bool is_known_call(std::string_view s) {
    auto name = call_name(s);
    return !name.empty() && function_named(name).has_value();
}

/// Split on commas that sit outside every bracket pair.
std::vector<std::string_view> split_top_level(std::string_view s) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '[') {
            ++depth;
        } else if (s[i] == ']') {
            if (--depth < 0) fail("Unbalanced brackets in action: an extra ']' appears. Please check the brackets.");
        } else if (s[i] == ',' && depth == 0) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    if (depth != 0) fail("Unbalanced brackets in action: a '[' is never closed. Please check the brackets.");
    parts.push_back(s.substr(start));
    return parts;
}

std::size_t last_top_level_comma(std::string_view s) {
    int depth = 0;
    std::size_t found = std::string_view::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '[') ++depth;
        else if (s[i] == ']') --depth;
        else if (s[i] == ',' && depth == 0) found = i;
    }
    return found;
}

struct Call {
    Fn fn;
    std::string_view interior;
};

/// Decompose "Name[interior]" (already trimmed, brackets balanced).
Call split_call(std::string_view s) {
    auto name = call_name(s);
    if (name.empty()) {
        fail("Invalid action format '" + std::string(s) +
             "'. Actions are written as Function[arguments], e.g. Retrieve[keyword].");
    }
    auto fn = function_named(name);
    if (!fn) fail(std::string(kInvalidFunctionMessage));

    const auto open = s.find('[');
    int depth = 0;
    std::size_t close = std::string_view::npos;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '[') ++depth;
        else if (s[i] == ']' && --depth == 0) {
            close = i;
            break;
        }
    }
    if (close == std::string_view::npos) fail("Unbalanced brackets in action: a '[' is never closed. Please check the brackets.");
    if (close + 1 != s.size()) {
        fail("Unexpected text after ']' in '" + std::string(s) +
             "'. Separate parallel actions with commas.");
    }
    return {*fn, text::trim(s.substr(open + 1, close - open - 1))};
}

constexpr std::string_view kDepthMessage =
    "Compound functions may combine no more than two functions, e.g. Feature[Retrieve[keyword], feature].";
constexpr std::string_view kInnerMessage =
    "Only Retrieve can be nested inside Feature, Neighbour or Degree, e.g. Neighbour[Retrieve[keyword], "
    "neighbor_type].";
constexpr std::string_view kFinishAloneMessage =
    "Finish must be used alone: it cannot be combined with or nested in other functions.";

/// Number of nested function applications in `s`, counting `s` itself.
int call_depth(std::string_view s) {
    if (!is_known_call(s)) return 0;
    auto interior = text::trim(s.substr(s.find('[') + 1, s.rfind(']') - s.find('[') - 1));
    int inner = 0;
    for (auto part : split_top_level(interior)) inner = std::max(inner, call_depth(text::trim(part)));
    return 1 + inner;
}

RetrieveExpr parse_retrieve_body(std::string_view interior, bool nested) {
    if (is_known_call(interior)) {
        fail(std::string(nested ? kDepthMessage : "Retrieve takes a keyword; it cannot wrap another function."));
    }
    if (interior.empty()) fail("Retrieve needs a keyword, e.g. Retrieve[keyword].");
    return {std::string(interior)};
}

Target parse_target(std::string_view s) {
    if (!is_known_call(s)) return NodeId{std::string(s)};
    if (call_depth(s) > 1) fail(std::string(kDepthMessage));
    auto call = split_call(s);
    if (call.fn == Fn::finish) fail(std::string(kFinishAloneMessage));
    if (call.fn != Fn::retrieve) fail(std::string(kInnerMessage));
    return parse_retrieve_body(call.interior, true);
}

ActionExpr parse_expr(std::string_view s) {
    auto call = split_call(s);
    switch (call.fn) {
        case Fn::retrieve: return parse_retrieve_body(call.interior, false);
        case Fn::finish: return FinishExpr{std::string(call.interior)};
        default: break;
    }

    const auto name = canonical_name(call.fn);
    const std::string usage = std::string(name) + " needs two arguments: " + std::string(name) +
                              (call.fn == Fn::feature ? "[Node, feature]." : "[Node, neighbor_type].");
    const auto comma = last_top_level_comma(call.interior);
    if (comma == std::string_view::npos) fail(usage);
    auto target_text = text::trim(call.interior.substr(0, comma));
    auto key = text::trim(call.interior.substr(comma + 1));
    if (target_text.empty() || key.empty()) fail(usage);
    if (key.find_first_of("[]") != std::string_view::npos) {
        if (is_known_call(key)) fail(std::string(kInnerMessage));
        fail(usage);
    }

    Target target = parse_target(target_text);
    std::string k(key);
    switch (call.fn) {
        case Fn::feature: return FeatureExpr{std::move(target), std::move(k)};
        case Fn::neighbour: return NeighbourExpr{std::move(target), std::move(k)};
        default: return DegreeExpr{std::move(target), std::move(k)};
    }
}

}  // namespace

ActionList parse_actions(std::string_view raw) {
    auto s = text::trim(raw);
    if (s.empty()) fail("No action given. Use one of Retrieve, Feature, Degree, Neighbour or Finish.");
    ActionList out;
    for (auto part : split_top_level(s)) {
        auto piece = text::trim(part);
        if (piece.empty()) fail("Empty action between commas. Please list each action once, separated by commas.");
        out.push_back(parse_expr(piece));
    }
    if (out.size() > 1 && is_finish(out)) fail(std::string(kFinishAloneMessage));
    return out;
}

bool is_finish(const ActionList& list) {
    for (const auto& e : list) {
        if (std::holds_alternative<FinishExpr>(e)) return true;
    }
    return false;
}

// --- rendering --------------------------------------------------------------

namespace {

std::string render_target(const Target& t) {
    if (const auto* id = std::get_if<NodeId>(&t)) return id->value;
    return "Retrieve[" + std::get<RetrieveExpr>(t).query + "]";
}

struct Renderer {
    std::string operator()(const RetrieveExpr& e) const { return "Retrieve[" + e.query + "]"; }
    std::string operator()(const FeatureExpr& e) const {
        return "Feature[" + render_target(e.target) + ", " + e.feature + "]";
    }
    std::string operator()(const NeighbourExpr& e) const {
        return "Neighbour[" + render_target(e.target) + ", " + e.label + "]";
    }
    std::string operator()(const DegreeExpr& e) const {
        return "Degree[" + render_target(e.target) + ", " + e.label + "]";
    }
    std::string operator()(const FinishExpr& e) const { return "Finish[" + e.answer + "]"; }
};

}  // namespace

std::string render(const ActionExpr& expr) { return std::visit(Renderer{}, expr); }

std::string render(const ActionList& list) {
    std::string out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i > 0) out += ", ";
        out += render(list[i]);
    }
    return out;
}

// --- evaluation -------------------------------------------------------------

namespace {

Observation advisory(std::string text) { return {std::move(text), Observation::Outcome::advisory}; }

Observation eval_retrieve(const GraphEnv& env, const RetrieveExpr& e) {
    std::optional<RetrievalHit> hit;
    try {
        hit = retrieve_top1(env.index, e.query);
    } catch (const ArgumentError&) {
        return advisory("Retrieve needs a non-empty keyword. Please provide one.");
    }
    if (!hit) {
        return advisory("No node in the graph matches the keyword \"" + e.query +
                        "\". Please try a different keyword.");
    }
    return {"The ID of this retrieval target node is " + hit->node.value + ".", Observation::Outcome::ok};
}

/// Resolve a target to a node id. On failure returns the advisory to report.
/// `prefix` receives the nested Retrieve sentence, if any.
std::variant<std::string, Observation> resolve(const GraphEnv& env, const Target& t, std::string& prefix) {
    if (const auto* id = std::get_if<NodeId>(&t)) return id->value;
    auto obs = eval_retrieve(env, std::get<RetrieveExpr>(t));
    if (!obs.ok()) return obs;
    prefix = obs.text + " ";
    constexpr std::string_view lead = "The ID of this retrieval target node is ";
    return obs.text.substr(lead.size(), obs.text.size() - lead.size() - 1);
}

std::string render_id_list(std::span<const NodeId> ids, std::size_t cap) {
    const std::size_t shown = cap == 0 ? ids.size() : std::min(ids.size(), cap);
    std::string out = "[";
    for (std::size_t i = 0; i < shown; ++i) {
        if (i > 0) out += ", ";
        out += "'" + ids[i].value + "'";
    }
    out += "]";
    if (shown < ids.size()) out += " ... (" + std::to_string(ids.size()) + " nodes total)";
    return out;
}

template <class Expr, class Body>
Observation with_target(const GraphEnv& env, const Expr& e, Body body) {
    std::string prefix;
    auto resolved = resolve(env, e.target, prefix);
    if (auto* obs = std::get_if<Observation>(&resolved)) return std::move(*obs);
    auto result = body(std::get<std::string>(resolved));
    result.text = prefix + result.text;
    return result;
}

struct Evaluator {
    const GraphEnv& env;
    const EvalOptions& opts;

    Observation operator()(const RetrieveExpr& e) const { return eval_retrieve(env, e); }

    Observation operator()(const FeatureExpr& e) const {
        return with_target(env, e, [&](const std::string& id) {
            auto v = get_feature(env.graph, id, e.feature);
            if (!v) return advisory(std::string(kMissMessage));
            return Observation{"The " + e.feature + " feature of " + id + " are: " + std::string(*v) + ".",
                               Observation::Outcome::ok};
        });
    }

    Observation operator()(const NeighbourExpr& e) const {
        return with_target(env, e, [&](const std::string& id) {
            auto nb = get_neighbours(env.graph, id, e.label);
            if (!nb) return advisory(std::string(kMissMessage));
            return Observation{"The " + e.label + " neighbors of " + id + " are: " +
                                   render_id_list(*nb, opts.neighbour_cap) + ".",
                               Observation::Outcome::ok};
        });
    }

    Observation operator()(const DegreeExpr& e) const {
        return with_target(env, e, [&](const std::string& id) {
            auto d = get_degree(env.graph, id, e.label);
            if (!d) return advisory(std::string(kMissMessage));
            return Observation{"The number of " + e.label + " neighbors of " + id + " is " + std::to_string(*d) +
                                   ".",
                               Observation::Outcome::ok};
        });
    }

    Observation operator()(const FinishExpr&) const {
        return advisory("Finish ends the task and cannot be evaluated against the graph.");
    }
};

}  // namespace

Observation eval_action(const GraphEnv& env, const ActionExpr& expr, const EvalOptions& opts) {
    try {
        return std::visit(Evaluator{env, opts}, expr);
    } catch (const std::exception& e) {
        return advisory(std::string("The graph query could not be completed (") + e.what() +
                        "). Please modify the action.");
    }
}

Observation eval_action_list(const GraphEnv& env, const ActionList& list, const EvalOptions& opts) {
    Observation out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        auto obs = eval_action(env, list[i], opts);
        if (i > 0) out.text += " ";
        out.text += obs.text;
        if (!obs.ok()) out.outcome = Observation::Outcome::advisory;
    }
    if (out.text.empty()) out = advisory("No action given. Use one of Retrieve, Feature, Degree, Neighbour or Finish.");
    return out;
}

}  // namespace kgqa
