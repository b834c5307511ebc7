#pragma once

// Problem definition for the two-spouse positivity control problem:
//
//   x1' = r1 (xbar1 - x1) + u1 x2
//   x2' = r2 (xbar2 - x2) + u2 x1
//
// with shared payoff integrand
//
//   F = alpha [x1 - (u1 - u0)^2 / (2 eps)] + (1 - alpha) [x2 - (u2 - u0)^2 / (2 eps)]
//
// maximized over 0 <= ui <= ui_max on [0, T].

#include <optional>
#include <utility>

#include "marital/trajectory.hpp"

namespace marital {

// Cost scale eps of the emotional-cost term. Infinite removes the cost
// entirely and makes the problem linear in the controls.
class CostScale {
 public:
  static constexpr CostScale infinite() { return CostScale{}; }
  static constexpr CostScale finite(double eps) { return CostScale{eps}; }

  constexpr bool is_infinite() const { return !value_.has_value(); }
  // Precondition: !is_infinite().
  constexpr double value() const { return *value_; }

  friend constexpr bool operator==(const CostScale&, const CostScale&) = default;

 private:
  constexpr CostScale() = default;
  constexpr explicit CostScale(double eps) : value_(eps) {}
  std::optional<double> value_;
};

struct ModelParams {
  double r1 = 0.82;
  double r2 = 0.82;
  double xbar1 = 0.2;
  double xbar2 = 0.4;
  double alpha = 1.0;
  CostScale epsilon = CostScale::infinite();
  double u0 = 0.0;
  double u1max = 0.5;
  double u2max = 0.5;
  double T = 10.0;
  double x1_0 = -0.2;
  double x2_0 = -0.4;

  // Throws InvalidParams naming the first violated constraint.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct StateVec {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct AdjointVec {
  double lam1 = 0.0;
  double lam2 = 0.0;
};

struct ControlVec {
  double u1 = 0.0;
  double u2 = 0.0;
};

// Time derivative of the state.
StateVec state_rhs(const ModelParams& p, const StateVec& s, const ControlVec& u);

// Time derivative of the adjoint, -dH/dx. Independent of the state.
AdjointVec adjoint_rhs(const ModelParams& p, const AdjointVec& lam, const ControlVec& u);

// Psi_i = dH/du_i of the linear part: (lam1 x2, lam2 x1).
std::pair<double, double> switching_functions(const StateVec& s, const AdjointVec& lam);

// Pointwise maximizer of the Hamiltonian over the control box.
//
// eps infinite:        both controls bang-bang on the sign of Psi_i.
// eps finite, alpha=0: u1 bang-bang, u2 interior.
// eps finite, alpha=1: u2 bang-bang, u1 interior.
// otherwise:           u1 = clamp(eps/alpha Psi1 + u0), u2 = clamp(eps/(1-alpha) Psi2 + u0).
//
// A bang-bang control with Psi_i == 0 exactly is set to 0.
ControlVec control_law(const ModelParams& p, const StateVec& s, const AdjointVec& lam);

// Payoff integrand F. The cost term is dropped when eps is infinite.
double running_payoff(const ModelParams& p, const StateVec& s, const ControlVec& u);

double hamiltonian(const ModelParams& p, const StateVec& s, const ControlVec& u,
                   const AdjointVec& lam);

bool admissible(const ModelParams& p, const ControlVec& u);

// J: composite trapezoid rule of running_payoff over the trajectory's grid.
// Throws InvalidTrajectory on misaligned arrays.
double objective(const ModelParams& p, const Trajectory& traj);

}  // namespace marital
