#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spme/cell_model.hpp"
#include "spme/estimator.hpp"
#include "spme/gp.hpp"
#include "spme/pso.hpp"
#include "spme/scenario.hpp"

namespace spme::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

/// Reads one JSON object member at a time under a dotted key path, so every
/// error names the offending key. finish() rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path);

  bool has(std::string_view key) const;
  const Json& at(std::string_view key);
  std::string key_path(std::string_view key) const;

  double number(std::string_view key);
  double number(std::string_view key, double fallback);
  long long integer(std::string_view key);
  long long integer(std::string_view key, long long fallback);
  std::uint64_t seed(std::string_view key);
  std::uint64_t seed(std::string_view key, std::uint64_t fallback);
  std::string string(std::string_view key);
  std::string string(std::string_view key, std::string fallback);
  bool boolean(std::string_view key, bool fallback);
  std::vector<double> numbers(std::string_view key);

  void finish() const;

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

// Cell description. Every parameter key is required; "discretization" and
// "cutoff" fall back to the defaults.
Json to_json(const Cell& cell);
Cell cell_from_json(const Json& j, const std::string& path);
/// A "cell" member is either an inline object or a path to a cell file,
/// resolved against base_dir.
Cell resolve_cell(const Json& value, const std::string& path, const std::filesystem::path& base_dir);

Json to_json(const pso::SwarmConfig& config);
/// Missing keys keep the value from base.
pso::SwarmConfig swarm_from_json(const Json& j, const std::string& path, const pso::SwarmConfig& base = {});

Json to_json(const scenario::ProfileSpec& spec);
scenario::ProfileSpec profile_from_json(const Json& j, const std::string& path);

Json to_json(const scenario::NoiseSpec& noise);
Json to_json(const scenario::TruthSpec& spec);
/// The "cell" member may be omitted when a cell is supplied by the caller.
scenario::TruthSpec truth_from_json(const Json& j, const std::string& path, const std::filesystem::path& base_dir);

Json to_json(const scenario::TrialSpec& trial);
scenario::TrialSpec trial_from_json(const Json& j, const std::string& path);

Json to_json(const est::EstimationResult& result);
/// Hyperparameters and feature scaling of a fitted residual model, enough to
/// rebuild it from the training data.
Json to_json(const gp::FeatureScaler& scaler, const gp::KernelHyperparameters& hp);

std::vector<Target> targets_from_json(const Json& j, const std::string& path);
est::ObjectiveKind objective_from_string(std::string_view name, const std::string& path);
scenario::TruthMode truth_mode_from_string(std::string_view name, const std::string& path);
const char* to_string(scenario::TruthMode mode);
const char* to_string(scenario::ProfileKind kind);

// CSV

/// time_s, current_A, voltage_V, soc_surf, soc_bulk, ce_n_mol_m3, ce_p_mol_m3
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

/// time_s, current_A, voltage_true_V, voltage_meas_V
void write_dataset_csv(std::ostream& os, const scenario::Dataset& data);

struct DatasetTable {
  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> truth;
  std::vector<double> measured;
};

DatasetTable read_dataset_csv(const std::filesystem::path& path);

/// iteration, best_J, mean_J
void write_trace_csv(std::ostream& os, const std::vector<double>& best, const std::vector<double>& mean);

void write_parameter_rows_csv(std::ostream& os, const scenario::ExperimentReport& report);
void write_rmse_rows_csv(std::ostream& os, const scenario::ExperimentReport& report);
void write_aggregates_csv(std::ostream& os, const scenario::ExperimentReport& report);

}  // namespace spme::io
