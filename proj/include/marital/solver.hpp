#pragma once

// Forward-Backward Sweep for the two-spouse control problem, plus a
// brute-force search over piecewise-constant controls used as an oracle.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "marital/model.hpp"
#include "marital/trajectory.hpp"

namespace marital {

struct SolverConfig {
  std::size_t n_steps = 1000;
  double tolerance = 1e-3;
  // Weight of the new control law in the convex update; 1 means plain replacement.
  double relaxation = 0.5;
  int max_iters = 500;
  // Constant initial guesses; unset means clamp(u0).
  std::optional<double> initial_u1;
  std::optional<double> initial_u2;

  void validate() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct SolveResult {
  Trajectory trajectory;
  bool converged = false;
  int iterations = 0;
  double objective_value = 0.0;
  // max_k |u_new[k] - u_old[k]| over both controls, one entry per iteration.
  std::vector<double> history;
};

// RK4 integration of the state from (x1_0, x2_0). Controls at half steps are
// the mean of the adjacent nodal values. Throws DivergenceError at the first
// non-finite node.
StateArrays forward_sweep(const ModelParams& p, const Grid& g, const ControlArrays& u);

// RK4 integration of the adjoint backward from lambda(T) = 0.
AdjointArrays backward_sweep(const ModelParams& p, const Grid& g, const ControlArrays& u);

// u_new = theta * control_law + (1 - theta) * old_u, clamped to the box.
ControlArrays update_controls(const ModelParams& p, const StateArrays& x,
                              const AdjointArrays& lam, const ControlArrays& old_u,
                              double theta);

// True when tol * ||v||_1 >= ||v - v_old||_1.
bool relative_converged(const std::vector<double>& v, const std::vector<double>& v_old,
                        double tol);

// Iterates the sweeps until all six arrays satisfy the relative criterion or
// max_iters is hit. A non-converged result carries the best iterate found
// (largest objective). DivergenceError carries the iteration index.
SolveResult fbs_solve(const ModelParams& p, const SolverConfig& cfg);

enum class OracleMode { Auto, Exhaustive, CoordinateDescent };

struct OracleConfig {
  std::size_t segments = 8;
  std::size_t levels = 2;
  std::size_t n_steps = 200;
  OracleMode mode = OracleMode::Auto;
  // Exhaustive mode refuses to enumerate more than this many candidates.
  std::uint64_t budget = 10'000'000;
};

struct OracleResult {
  // Level value per segment for each spouse.
  std::vector<double> u1;
  std::vector<double> u2;
  double objective_value = 0.0;
  std::uint64_t candidates_evaluated = 0;
  OracleMode mode_used = OracleMode::Exhaustive;
};

// Expand per-segment levels to nodal controls. Node k belongs to segment
// floor(t_k / (T / segments)); the final node joins the last segment.
ControlArrays piecewise_controls(const Grid& g, const std::vector<double>& seg_u1,
                                 const std::vector<double>& seg_u2);

// Objective of the trajectory that forward_sweep produces from u.
double evaluate_controls(const ModelParams& p, const Grid& g, const ControlArrays& u);

// Best piecewise-constant control pair found on a levels-point grid over
// [0, ui_max]. Auto uses exhaustive enumeration within the budget and
// coordinate descent beyond it; Exhaustive over budget throws BudgetExceeded.
OracleResult oracle_search(const ModelParams& p, const OracleConfig& cfg);

}  // namespace marital
