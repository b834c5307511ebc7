#include "marital/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <functional>
#include <utility>

#include "marital/errors.hpp"

namespace marital {

namespace {

using Vec2 = std::array<double, 2>;

struct Coeffs {
  double c1, c2;
};

// Solve c1 m1 + c2 m2 = rhs for 2-vectors m1, m2.
Coeffs solve2(const Vec2& m1, const Vec2& m2, const Vec2& rhs) {
  const double det = m1[0] * m2[1] - m2[0] * m1[1];
  return {(rhs[0] * m2[1] - m2[0] * rhs[1]) / det, (m1[0] * rhs[1] - rhs[0] * m1[1]) / det};
}

// Linear 2-D system y' = f(t, y), RK4 from y(t_start) = 0 over the grid in
// the given direction.
using Rhs2 = std::function<Vec2(double, const Vec2&)>;

std::pair<std::vector<double>, std::vector<double>> rk4_from_zero(const Grid& g, const Rhs2& f,
                                                                  bool backward) {
  const std::size_t n = g.size();
  std::vector<double> y1(n, 0.0), y2(n, 0.0);
  const double h = backward ? -g.step() : g.step();
  Vec2 y{0.0, 0.0};
  const auto add = [](const Vec2& a, double s, const Vec2& b) {
    return Vec2{a[0] + s * b[0], a[1] + s * b[1]};
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t k = backward ? n - 1 - i : i;
    const std::size_t next = backward ? k - 1 : k + 1;
    const double t = g.node(k);
    const double tm = t + 0.5 * h;
    const double tn = g.node(next);
    const Vec2 k1 = f(t, y);
    const Vec2 k2 = f(tm, add(y, 0.5 * h, k1));
    const Vec2 k3 = f(tm, add(y, 0.5 * h, k2));
    const Vec2 k4 = f(tn, add(y, h, k3));
    y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
      throw DivergenceError("first-order correction is non-finite at node " +
                                std::to_string(next),
                            next);
    }
    y1[next] = y[0];
    y2[next] = y[1];
  }
  return {std::move(y1), std::move(y2)};
}

void require_interior_alpha(const ModelParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
    throw AltruistRegime(
        "alpha must lie strictly inside (0, 1) for the interior control expansion; "
        "alpha in {0, 1} makes one control bang-bang, use fbs_solve");
  }
}

}  // namespace

StateVec ZerothOrderSolution::state(double t) const {
  const double e1 = a1 * std::exp(eta1 * t);
  const double e2 = a2 * std::exp(eta2 * t);
  return {e1 * state_mode1[0] + e2 * state_mode2[0] + state_particular[0],
          e1 * state_mode1[1] + e2 * state_mode2[1] + state_particular[1]};
}

AdjointVec ZerothOrderSolution::adjoint(double t) const {
  const double e1 = b1 * std::exp(rho1 * t);
  const double e2 = b2 * std::exp(rho2 * t);
  return {e1 * adjoint_mode1[0] + e2 * adjoint_mode2[0] + adjoint_particular[0],
          e1 * adjoint_mode1[1] + e2 * adjoint_mode2[1] + adjoint_particular[1]};
}

ZerothOrderSolution zeroth_solve(const ModelParams& p) {
  p.validate();
  const double r1 = p.r1, r2 = p.r2, u0 = p.u0;
  const double det = r1 * r2 - u0 * u0;
  if (std::abs(det) <= 1e-12 * std::max(r1 * r2, u0 * u0)) {
    throw ResonantParameters("r1 * r2 == u0^2: no constant particular solution");
  }
  const double disc = (r1 - r2) * (r1 - r2) + 4.0 * u0 * u0;
  if (disc <= 1e-24 * (r1 + r2) * (r1 + r2)) {
    throw RepeatedEigenvalue(
        "zeroth-order modes coincide (r1 == r2 and u0 == 0); closed form not available");
  }
  const double root = std::sqrt(disc);

  ZerothOrderSolution z;
  z.eta1 = 0.5 * (-(r1 + r2) + root);
  z.eta2 = 0.5 * (-(r1 + r2) - root);
  z.rho1 = 0.5 * (r1 + r2 + root);
  z.rho2 = 0.5 * (r1 + r2 - root);

  if (u0 != 0.0) {
    z.state_mode1 = {u0, r1 + z.eta1};
    z.state_mode2 = {u0, r1 + z.eta2};
    z.adjoint_mode1 = {u0, r1 - z.rho1};
    z.adjoint_mode2 = {u0, r1 - z.rho2};
  } else {
    // Decoupled: rates are exactly -r1 and -r2 and the modes are the axes.
    const Vec2 e1{1.0, 0.0}, e2{0.0, 1.0};
    const bool first_slower = r1 < r2;
    z.eta1 = first_slower ? -r1 : -r2;
    z.eta2 = first_slower ? -r2 : -r1;
    z.rho1 = -z.eta2;
    z.rho2 = -z.eta1;
    z.state_mode1 = first_slower ? e1 : e2;
    z.state_mode2 = first_slower ? e2 : e1;
    z.adjoint_mode1 = first_slower ? e2 : e1;
    z.adjoint_mode2 = first_slower ? e1 : e2;
  }

  z.state_particular = {(p.xbar1 * r1 * r2 + p.xbar2 * r2 * u0) / det,
                        (r1 * r2 * p.xbar2 + r1 * p.xbar1 * u0) / det};
  z.adjoint_particular = {(u0 - u0 * p.alpha + p.alpha * r2) / det,
                          (u0 * p.alpha + (1.0 - p.alpha) * r1) / det};

  const Coeffs a = solve2(z.state_mode1, z.state_mode2,
                          {p.x1_0 - z.state_particular[0], p.x2_0 - z.state_particular[1]});
  z.a1 = a.c1;
  z.a2 = a.c2;

  const double g1 = std::exp(z.rho1 * p.T);
  const double g2 = std::exp(z.rho2 * p.T);
  const Coeffs b = solve2({g1 * z.adjoint_mode1[0], g1 * z.adjoint_mode1[1]},
                          {g2 * z.adjoint_mode2[0], g2 * z.adjoint_mode2[1]},
                          {-z.adjoint_particular[0], -z.adjoint_particular[1]});
  z.b1 = b.c1;
  z.b2 = b.c2;
  return z;
}

FirstOrderArrays first_order_solve(const ModelParams& p, const ZerothOrderSolution& z,
                                   const Grid& g) {
  require_interior_alpha(p);
  const double r1 = p.r1, r2 = p.r2, u0 = p.u0;
  const double inv_a = 1.0 / p.alpha;
  const double inv_b = 1.0 / (1.0 - p.alpha);

  const Rhs2 state_rhs1 = [&](double t, const Vec2& y) {
    const StateVec x = z.state(t);
    const AdjointVec l = z.adjoint(t);
    return Vec2{-r1 * y[0] + u0 * y[1] + inv_a * l.lam1 * x.x2 * x.x2,
                -r2 * y[1] + u0 * y[0] + inv_b * l.lam2 * x.x1 * x.x1};
  };
  const Rhs2 adjoint_rhs1 = [&](double t, const Vec2& m) {
    const StateVec x = z.state(t);
    const AdjointVec l = z.adjoint(t);
    return Vec2{r1 * m[0] - u0 * m[1] - inv_b * l.lam2 * l.lam2 * x.x1,
                r2 * m[1] - u0 * m[0] - inv_a * l.lam1 * l.lam1 * x.x2};
  };

  auto [x1, x2] = rk4_from_zero(g, state_rhs1, false);
  auto [m1, m2] = rk4_from_zero(g, adjoint_rhs1, true);
  return {{std::move(x1), std::move(x2)}, {std::move(m1), std::move(m2)}};
}

PerturbationTrajectory perturbation_trajectory(const ModelParams& p, const Grid& g, int order) {
  if (order != 0 && order != 1) throw InvalidParams("order", "must be 0 or 1");
  if (p.epsilon.is_infinite()) {
    throw InvalidParams("epsilon", "perturbation expansion needs a finite epsilon");
  }
  require_interior_alpha(p);
  const ZerothOrderSolution z = zeroth_solve(p);
  const std::size_t n = g.size();

  StateArrays x0{std::vector<double>(n), std::vector<double>(n)};
  AdjointArrays l0{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double t = g.node(k);
    const StateVec s = z.state(t);
    const AdjointVec l = z.adjoint(t);
    x0.x1[k] = s.x1;
    x0.x2[k] = s.x2;
    l0.lam1[k] = l.lam1;
    l0.lam2[k] = l.lam2;
  }
  // Pin boundary data exactly; the closed form reproduces it to rounding.
  x0.x1[0] = p.x1_0;
  x0.x2[0] = p.x2_0;
  l0.lam1[n - 1] = 0.0;
  l0.lam2[n - 1] = 0.0;

  StateArrays xs = x0;
  AdjointArrays ls = l0;
  FirstOrderArrays first;
  if (order == 1) {
    first = first_order_solve(p, z, g);
    const double eps = p.epsilon.value();
    for (std::size_t k = 0; k < n; ++k) {
      xs.x1[k] += eps * first.x.x1[k];
      xs.x2[k] += eps * first.x.x2[k];
      ls.lam1[k] += eps * first.lam.lam1[k];
      ls.lam2[k] += eps * first.lam.lam2[k];
    }
  }

  ControlArrays u{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const ControlVec c = control_law(p, {xs.x1[k], xs.x2[k]}, {ls.lam1[k], ls.lam2[k]});
    u.u1[k] = c.u1;
    u.u2[k] = c.u2;
  }

  return PerturbationTrajectory{g,
                                std::move(x0),
                                std::move(l0),
                                std::move(first.x),
                                std::move(first.lam),
                                Trajectory(g, std::move(xs), std::move(ls), std::move(u))};
}

}  // namespace marital
