#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rbcert/config.hpp"
#include "rbcert/truth.hpp"

namespace rbcert {

/// Process exit codes of every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

struct CommandOptions {
    unsigned threads = 1;
    /// Overrides output.directory of the config (and is the only output
    /// location for online).
    std::optional<std::filesystem::path> out;
    bool lift = false;
    /// Basis file for --lift and validate; defaults to basis.json next to the model.
    std::optional<std::filesystem::path> basis;
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

/// Truth problem described by the problem section (thermal types only).
[[nodiscard]] TruthProblem build_problem(const ProblemConfig& problem);

/// u⁰ of the parabolic problem: problem.initial at every free node.
[[nodiscard]] Vector initial_condition(const ProblemConfig& problem, const TruthProblem& truth);

[[nodiscard]] std::vector<Parameter> training_parameters(const RunConfig& config, const ParameterDomain& domain);
[[nodiscard]] std::vector<Parameter> validation_parameters(const RunConfig& config, const ParameterDomain& domain);

int cmd_offline(const std::filesystem::path& config_path, const CommandOptions& options, Streams io);
int cmd_online(const std::filesystem::path& model_path, const std::vector<std::vector<Scalar>>& mus,
               const CommandOptions& options, Streams io);
int cmd_validate(const std::filesystem::path& model_path, const std::filesystem::path& config_path,
                 const CommandOptions& options, Streams io);
int cmd_nwidth_demo(const std::filesystem::path& config_path, const CommandOptions& options, Streams io);
int cmd_pod_greedy(const std::filesystem::path& config_path, const CommandOptions& options, Streams io);

}  // namespace rbcert
