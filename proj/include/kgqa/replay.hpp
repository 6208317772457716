#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/orchestrator.hpp"

namespace kgqa {

/// Outcome of replaying a recorded episode against its expected output.
struct ReplayResult {
    std::vector<std::string> failures;
    EpisodeState state;
    double seconds = 0.0;

    bool passed() const { return failures.empty(); }
};

/// Describes the first differing line, or returns "" when equal.
std::string first_divergence(std::string_view expected, std::string_view actual);

/// Runs the episode described by `dir`/fixture.json with a scripted backend
/// and compares each attempt's scratchpad byte for byte, the final answer,
/// the correctness flag and the attempt and reflection counts.
/// Throws LoadError / ConfigError when the fixture itself is unusable.
ReplayResult replay_fixture(const std::filesystem::path& dir);

}  // namespace kgqa
