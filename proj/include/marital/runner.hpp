#pragma once

// Experiment orchestration: runs a Scenario, writes CSV/JSON results into an
// output directory, and returns a manifest describing what was produced.
//
// Output files (all CSVs: header row, LF line endings, %.17g numbers):
//   trajectory.csv          t,x1,x2,lambda1,lambda2,u1,u2
//   influence_spouse{1,2}.csv  t,partner_x,influence,control
//   aggregate.csv           sweeps: one row per grid point
//   slope_profile.csv       robustness: T,spouse,window_start,window_end,
//                           mean_slope,std_slope,mean_control
//   manifest.json           RunManifest

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "marital/errors.hpp"
#include "marital/scenario.hpp"

namespace marital {

inline constexpr const char* kToolVersion = "0.1.0";

class IoError : public Error {
 public:
  using Error::Error;
};

struct RunManifest {
  std::string kind;
  std::string tool_version = kToolVersion;
  // Canonical scenario echo.
  nlohmann::ordered_json scenario;
  bool converged = true;
  int iterations = 0;
  std::optional<double> objective_value;
  std::optional<StyleVerdict> styles;
  std::optional<EquilibriumReport> equilibrium;
  std::optional<SingularityReport> singularity;
  // Kind-specific results.
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  // Paths relative to the output directory; covers every file written
  // except manifest.json itself.
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  // Set when a solve diverged.
  std::optional<std::string> error;

  nlohmann::ordered_json to_json() const;
};

// Runs the scenario and writes manifest.json last. Solver divergence and
// non-convergence are recorded (converged = false), never thrown; the caller
// decides the exit status. Throws IoError on filesystem failures.
RunManifest run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

// Runs every *.json scenario in dir (sorted by name) into out_dir/<stem>/.
std::vector<RunManifest> run_scenario_directory(const std::filesystem::path& dir,
                                                const std::filesystem::path& out_dir,
                                                std::optional<std::uint64_t> seed_override,
                                                bool allow_nonconverged);

// Helpers shared with the CLI and tests.
std::string read_text_file(const std::filesystem::path& p);
void write_trajectory_csv(const std::filesystem::path& p, const Trajectory& traj);
void write_influence_csv(const std::filesystem::path& p, const std::vector<InfluenceSample>& s);

nlohmann::ordered_json to_json(const EquilibriumReport& r);
nlohmann::ordered_json to_json(const SingularityReport& r);
nlohmann::ordered_json to_json(const StyleVerdict& v);

}  // namespace marital
