#include "kgqa/prompt_catalog.hpp"

#include <array>
#include <optional>
#include <fstream>
#include <sstream>

#include "kgqa/errors.hpp"

namespace kgqa {

namespace {

constexpr std::string_view kScoring =
    "You are grading a question answering system. Compare the predicted answer with the reference answer for "
    "the question below. The prediction is correct when it gives the same answer as the reference; ignore "
    "differences in formatting, casing and wording.\n"
    "Question: {question}\n"
    "Reference answer: {gold}\n"
    "Predicted answer: {predicted}\n"
    "Explain your decision in one sentence, then respond [yes] if the prediction is correct, or [no] if it is "
    "not.";

void require(std::string_view name, const std::string& tmpl, std::initializer_list<std::string_view> keys) {
    for (auto key : keys) {
        const std::string ph = "{" + std::string(key) + "}";
        if (tmpl.find(ph) == std::string::npos) {
            throw ConfigError("prompt template '" + std::string(name) + "' lacks placeholder " + ph);
        }
    }
}

std::optional<std::string> read_optional(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    auto s = buf.str();
    // One trailing newline is an artifact of the file, not of the prompt.
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::string read_required(const std::filesystem::path& dir, std::string_view file) {
    auto s = read_optional(dir / file);
    if (!s) {
        throw ConfigError("prompt catalog " + dir.string() + " is missing " + std::string(file) +
                          " (each domain directory needs reasoning.txt, reflection.txt, evaluation.txt, "
                          "examples.txt and graph_definition.txt)");
    }
    return *s;
}

}  // namespace

std::string_view default_scoring_template() { return kScoring; }

void PromptCatalog::validate() const {
    require("reasoning", reasoning, {"examples", "reflections", "graph_definition", "question", "scratchpad"});
    require("reflection", reflection, {"graph_definition", "examples", "question", "scratchpad"});
    require("evaluation", evaluation, {"examples", "graph_definition", "question", "scratchpad"});
    require("scoring", scoring, {"question", "gold", "predicted"});
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt catalog directory " + dir.string() + " does not exist");
    }
    PromptCatalog c;
    c.reasoning = read_required(dir, "reasoning.txt");
    c.reflection = read_required(dir, "reflection.txt");
    c.evaluation = read_required(dir, "evaluation.txt");
    c.examples = read_required(dir, "examples.txt");
    c.graph_definition = read_required(dir, "graph_definition.txt");
    c.reflection_examples = read_optional(dir / "reflection_examples.txt").value_or(c.examples);
    c.evaluation_examples = read_optional(dir / "evaluation_examples.txt").value_or(c.examples);
    c.scoring = read_optional(dir / "scoring.txt").value_or(std::string(kScoring));
    c.validate();
    return c;
}

}  // namespace kgqa
