#pragma once

// Post-solve analysis: adjoint-plane equilibrium structure for frozen
// controls, singular-arc conditions, maximized-Hamiltonian diagnostics, and
// the influence-function statistics used to label interaction styles.

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "marital/model.hpp"
#include "marital/trajectory.hpp"

namespace marital {

enum class Spouse { First = 1, Second = 2 };

// ---------------------------------------------------------------------------
// Adjoint plane

enum class EquilibriumClass { Saddle, UnstableNode, UnstableSpiral, Degenerate };

std::string to_string(EquilibriumClass c);

// Fixed point of the adjoint system with the controls frozen at (u1, u2).
// Throws DegenerateDenominator when r1 r2 == u1 u2.
AdjointVec adjoint_equilibrium(const ModelParams& p, double u1, double u2);

struct EquilibriumReport {
  // Unset when r1 r2 == u1 u2.
  std::optional<AdjointVec> point;
  std::complex<double> mu_plus;
  std::complex<double> mu_minus;
  // Eigenvectors for mu_plus and mu_minus, scaled so the second entry is 1
  // whenever that is possible.
  std::array<std::complex<double>, 2> v;
  std::array<std::complex<double>, 2> w;
  EquilibriumClass classification = EquilibriumClass::Degenerate;
};

// Eigenstructure of the adjoint Jacobian [[r1, -u2], [-u1, r2]] and the
// region label from the product u1 u2:
//   u1 u2 > r1 r2                     Saddle
//   -(r1 - r2)^2 / 4 < u1 u2 < r1 r2  UnstableNode
//   u1 u2 < -(r1 - r2)^2 / 4          UnstableSpiral
// Boundary equalities are Degenerate. u1, u2 are not restricted to the
// control box so the spiral region is reachable for analysis.
EquilibriumReport classify_adjoint_equilibrium(const ModelParams& p, double u1, double u2);

struct PositivityVerdict {
  bool positive = true;
  // First node with t < T where an adjoint is <= -tol.
  std::optional<std::size_t> first_violation;
};

// lambda_i(t) > -tol at every node with t < T.
PositivityVerdict adjoint_positivity_check(const Trajectory& traj, double tol);

// ---------------------------------------------------------------------------
// Singular arcs

struct SingularityReport {
  // u1 singular: x1_0 == xbar1 and -r2 xbar2 == u2max xbar1.
  bool u1_singular_capable = false;
  double u1_initial_gap = 0.0;  // x1_0 - xbar1
  double u1_balance_gap = 0.0;  // -r2 xbar2 - u2max xbar1

  // u2 singular: x2_0 == xbar2 and -r1 xbar1 == u1max xbar2.
  bool u2_singular_capable = false;
  double u2_initial_gap = 0.0;  // x2_0 - xbar2
  double u2_balance_gap = 0.0;  // -r1 xbar1 - u1max xbar2

  // Same balance condition with the initial-state test written as
  // x2_0 == xbar1 instead of the mirrored x2_0 == xbar2.
  bool u2_singular_capable_literal = false;
  double u2_initial_gap_literal = 0.0;  // x2_0 - xbar1

  // A vanishing adjoint on an interval is never possible.
  bool lambda_interval_zero_possible = false;
  std::string lambda_interval_zero_reason;
};

// Equalities are tested as |a - b| <= tol * max(1, |a|, |b|).
SingularityReport singularity_report(const ModelParams& p, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Maximized Hamiltonian

double maximized_hamiltonian(const ModelParams& p, const StateVec& s, const AdjointVec& lam);

struct StateBox {
  double x1_min, x1_max, x2_min, x2_max;
};

// Central finite-difference Hessian of x -> maximized_hamiltonian(x, lam).
std::array<std::array<double, 2>, 2> maximized_hamiltonian_hessian(const ModelParams& p,
                                                                   const StateVec& s,
                                                                   const AdjointVec& lam,
                                                                   double step = 1e-4);

struct ConcavityReport {
  std::size_t points = 0;
  std::size_t negative_semidefinite = 0;
  double fraction_negative_semidefinite = 0.0;
  // Largest Hessian eigenvalue seen.
  double max_eigenvalue = 0.0;
};

// Evaluates the Hessian on a samples x samples lattice of cell centres in
// the box and counts points with both eigenvalues <= 1e-6. Diagnostic only.
ConcavityReport concavity_probe(const ModelParams& p, const AdjointVec& lam, const StateBox& box,
                                std::size_t samples);

// ---------------------------------------------------------------------------
// Influence functions and interaction styles

struct InfluenceSample {
  double t;
  double partner_x;
  double influence;
  double control;
};

// I = u_i x_j at every node.
std::vector<InfluenceSample> influence_samples(const Trajectory& traj, Spouse spouse);

struct SlopeWindow {
  double start;
  double end;
  double mean_slope;
  double std_slope;  // sample standard deviation across trajectories
  double mean_control;
};

struct SlopeProfile {
  double window;
  std::vector<SlopeWindow> spouse1;
  std::vector<SlopeWindow> spouse2;
};

// Least-squares slope of influence against partner positivity within
// [start, end); the final window also takes t = T. A window whose
// partner-positivity variance is below 1e-12 reports its mean control.
double window_slope(const std::vector<InfluenceSample>& samples, double start, double end,
                    bool include_end);

// Throws InvalidParams when the trajectories disagree on T or the window does
// not divide T.
SlopeProfile slope_profile(const std::vector<Trajectory>& trajs, double window);

enum class InteractionStyle { ConflictAvoiding, Validating, Mixed };

std::string to_string(InteractionStyle s);

struct StyleThresholds {
  // Fractions of u_max.
  double low = 0.15;
  double high = 0.7;
  double flat = 0.1;
  // Validating is judged on t <= horizon_fraction * T.
  double horizon_fraction = 0.8;

  friend bool operator==(const StyleThresholds&, const StyleThresholds&) = default;
};

struct SpouseStyle {
  InteractionStyle style = InteractionStyle::Mixed;
  double mean_u_partner_negative = 0.0;
  double mean_u_partner_positive = 0.0;
  double max_deviation_from_u0 = 0.0;
  std::string reason;
};

struct StyleVerdict {
  SpouseStyle spouse1;
  SpouseStyle spouse2;
};

StyleVerdict style_classify(const Trajectory& traj, const ModelParams& p,
                            const StyleThresholds& thresholds = {});

}  // namespace marital
