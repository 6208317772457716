#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace kgqa {

/// Prompt templates and per-domain text for one graph domain.
///
/// Directory layout: reasoning.txt, reflection.txt, evaluation.txt,
/// examples.txt and graph_definition.txt are required. Optional:
/// reflection_examples.txt and evaluation_examples.txt (default to
/// examples.txt) and scoring.txt (the answer-grading prompt).
struct PromptCatalog {
    std::string reasoning;
    std::string reflection;
    std::string evaluation;
    std::string scoring;
    std::string examples;
    std::string reflection_examples;
    std::string evaluation_examples;
    std::string graph_definition;

    /// Throws ConfigError naming the template and the missing placeholder.
    void validate() const;

    /// Loads and validates. Throws ConfigError for missing files.
    static PromptCatalog load(const std::filesystem::path& dir);
};

std::string_view default_scoring_template();

}  // namespace kgqa
