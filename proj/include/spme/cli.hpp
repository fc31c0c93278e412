#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "spme/estimator.hpp"
#include "spme/scenario.hpp"

namespace spme::cli {

namespace fs = std::filesystem;

/// Exit codes of the spme binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;   // usage or configuration error
inline constexpr int kExitRuntime = 2;  // simulation or estimation failure

// Each command reads one JSON config. Relative paths inside it resolve
// against the config file's directory. Thrown ConfigError maps to exit 1,
// any other error to exit 2.

/// Writes the trajectory CSV. A truncated run still writes the samples
/// before the cutoff and returns the truncation flag.
Truncation cmd_simulate(const fs::path& config, const fs::path& out_csv);

/// Writes the dataset CSV and a sidecar JSON next to it (same stem, .json).
/// The sidecar is itself a generate config that replays the same bytes.
scenario::Dataset cmd_generate(const fs::path& config, const fs::path& out_csv,
                               std::optional<std::uint64_t> noise_seed = std::nullopt);

/// Writes estimate.json and trace.csv into out_dir, plus residual_model.json
/// for the KOG objective. On estimation failure the trace gathered so far is
/// still written before the error propagates.
est::EstimationResult cmd_estimate(const fs::path& config, const fs::path& out_dir,
                                   std::optional<std::uint64_t> swarm_seed = std::nullopt);

/// Writes parameters.csv, rmse.csv, aggregates.csv, report.txt, seeds.json
/// and config.json (the resolved, replayable config) into out_dir.
scenario::ExperimentReport cmd_experiment(const fs::path& config, const fs::path& out_dir,
                                          std::optional<std::size_t> trials = std::nullopt,
                                          std::optional<std::uint64_t> seed = std::nullopt);

/// Parses argv, dispatches, reports errors on err and returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spme::cli
