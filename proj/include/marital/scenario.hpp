#pragma once

// Scenario files: JSON documents describing one experiment.
//
//   {
//     "kind": "solve" | "sweep_epsilon" | "sweep_alpha" | "perturb" |
//             "classify" | "robustness" | "oracle",
//     "params": { "r1", "r2", "xbar1", "xbar2", "alpha",
//                 "epsilon" (number or "Infinite"), "u0", "u1max", "u2max",
//                 "T", "x1_0", "x2_0" },
//     "solver": { "n_steps", "tolerance", "relaxation", "max_iters",
//                 "initial_u1", "initial_u2" },
//     "styles": { "low", "high", "flat", "horizon_fraction" },
//     "allow_nonconverged": bool,
//     "experiment": { kind-specific keys, see ExperimentSpec }
//   }
//
// Missing keys take their defaults, unknown keys are rejected. The canonical
// form written by serialize_scenario has a fixed key order, every value
// explicit, and doubles printed with 17 significant digits.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "marital/analysis.hpp"
#include "marital/errors.hpp"
#include "marital/model.hpp"
#include "marital/solver.hpp"

namespace marital {

enum class ExperimentKind { Solve, SweepEpsilon, SweepAlpha, Perturb, Classify, Robustness, Oracle };

std::string to_string(ExperimentKind k);
std::string to_string(OracleMode m);

// Malformed scenario text or an invalid value. key() names the offending key
// as a dotted path.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string key, const std::string& constraint)
      : Error(key + ": " + constraint), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ExperimentSpec {
  // sweep_epsilon, sweep_alpha
  std::vector<double> values;

  // perturb
  int order = 1;

  // classify: frozen controls and the adjoint-plane sampling box
  double u1 = 0.5;
  double u2 = 0.5;
  double lambda_min = -2.0;
  double lambda_max = 10.0;
  std::size_t field_points = 25;

  // robustness
  std::optional<std::uint64_t> seed;
  std::size_t samples = 50;
  std::vector<double> terminal_times{5.0, 10.0};
  double window = 1.0;
  double ic_min = -1.0;
  double ic_max = 1.0;

  // oracle
  std::size_t segments = 8;
  std::size_t levels = 2;
  std::size_t oracle_steps = 200;
  OracleMode mode = OracleMode::Auto;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

struct Scenario {
  ExperimentKind kind = ExperimentKind::Solve;
  ModelParams params;
  SolverConfig solver;
  StyleThresholds styles;
  bool allow_nonconverged = false;
  ExperimentSpec experiment;

  // Throws ScenarioError for any violated invariant.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Throws ScenarioError. For robustness scenarios seed_override replaces (or
// supplies) the experiment seed before validation; other kinds ignore it.
Scenario parse_scenario(const std::string& text,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

std::string serialize_scenario(const Scenario& s);

// Human-readable description of every key, printed by --help.
std::string scenario_format_help();

// Seeded uniform doubles in [lo, hi): mt19937_64 with 53-bit mantissa
// extraction, identical on every platform.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed);
  double next(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace marital
