#pragma once

// Small-eps expansion x = x_0 + eps x_1 + O(eps^2) of the interior-control
// system. The zeroth order is the linear system with both controls frozen at
// u0 and has a closed form; the first order is a linear system forced by
// zeroth-order products and is integrated numerically.

#include <array>
#include <vector>

#include "marital/model.hpp"
#include "marital/trajectory.hpp"

namespace marital {

// Closed form of the zeroth-order state and adjoint:
//
//   x_0(t)   = a1 e^{eta1 t} v1 + a2 e^{eta2 t} v2 + state_particular
//   lam_0(t) = b1 e^{rho1 t} w1 + b2 e^{rho2 t} w2 + adjoint_particular
//
// eta1 > eta2 are the eigenvalues of [[-r1, u0], [u0, -r2]] and
// rho1 > rho2 those of [[r1, -u0], [-u0, r2]], so rho1 = -eta2, rho2 = -eta1.
struct ZerothOrderSolution {
  double eta1 = 0.0, eta2 = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
  double b1 = 0.0, b2 = 0.0;
  std::array<double, 2> state_mode1{}, state_mode2{};
  std::array<double, 2> adjoint_mode1{}, adjoint_mode2{};
  std::array<double, 2> state_particular{};
  std::array<double, 2> adjoint_particular{};

  StateVec state(double t) const;
  AdjointVec adjoint(double t) const;
};

// Throws ResonantParameters when r1 r2 == u0^2 and RepeatedEigenvalue when the
// two modes coincide.
ZerothOrderSolution zeroth_solve(const ModelParams& p);

struct FirstOrderArrays {
  StateArrays x;
  AdjointArrays lam;
};

// RK4 solve of the first-order correction: states forward from 0, adjoints
// backward from 0 at T. Forcing is evaluated from the closed form at the RK4
// stage times. Throws AltruistRegime unless 0 < alpha < 1.
FirstOrderArrays first_order_solve(const ModelParams& p, const ZerothOrderSolution& z,
                                   const Grid& g);

struct PerturbationTrajectory {
  Grid grid;
  StateArrays x0;
  AdjointArrays lam0;
  // Empty for an order-0 assembly.
  StateArrays x1;
  AdjointArrays lam1;
  // Assembled x_0 + eps x_1 (or x_0 alone) with controls from the interior law.
  Trajectory assembled;
};

// Requires finite eps and 0 < alpha < 1; order is 0 or 1.
PerturbationTrajectory perturbation_trajectory(const ModelParams& p, const Grid& g, int order);

}  // namespace marital
