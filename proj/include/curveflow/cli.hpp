#pragma once

// Subcommands of the curveflow tool. Each returns a process exit code:
// 0 success, 1 check failure, 2 invalid input, 3 runtime divergence.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace curveflow::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kInvalidInput = 2, kDiverged = 3 };

struct TrainArgs {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct SampleArgs {
    std::filesystem::path checkpoint;
    std::size_t count = 1000;
    std::optional<std::size_t> steps;
    std::optional<std::string> method;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct AnalyzeArgs {
    std::optional<std::filesystem::path> checkpoint;
    std::optional<std::string> schedule;
    std::optional<std::size_t> grid_m;
    std::size_t pairs = 256;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> out;
};

struct CompareArgs {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct GradcheckArgs {
    std::uint64_t seed = 0;
    /// Test hook: perturb one computed gradient entry.
    bool corrupt_gradient = false;
};

/// Writes checkpoint.json, history.csv and manifest.json to the output directory.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
/// Writes samples.csv and samples.svg.
int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err);
/// Writes curvature_profile.csv and curvature_profile.svg and prints the determinant integral.
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);
/// Trains the baselines and every lambda in the grid; writes results.csv.
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace curveflow::cli
