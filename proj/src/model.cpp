#include "marital/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marital/errors.hpp"

namespace marital {

namespace {

void require(bool ok, const char* key, const char* constraint) {
  if (!ok) throw InvalidParams(key, constraint);
}

double clamp_control(double u, double umax) { return std::clamp(u, 0.0, umax); }

double bang_bang(double psi, double umax) { return psi > 0.0 ? umax : 0.0; }

}  // namespace

void ModelParams::validate() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  require(finite(r1) && r1 > 0.0, "r1", "must be finite and > 0");
  require(finite(r2) && r2 > 0.0, "r2", "must be finite and > 0");
  require(finite(xbar1), "xbar1", "must be finite");
  require(finite(xbar2), "xbar2", "must be finite");
  require(finite(alpha) && alpha >= 0.0 && alpha <= 1.0, "alpha", "must lie in [0, 1]");
  if (!epsilon.is_infinite()) {
    require(finite(epsilon.value()) && epsilon.value() > 0.0, "epsilon",
            "must be \"Infinite\" or a finite number > 0");
  }
  require(finite(u0) && u0 >= 0.0, "u0", "must be finite and >= 0");
  require(finite(u1max) && u1max > 0.0, "u1max", "must be finite and > 0");
  require(finite(u2max) && u2max > 0.0, "u2max", "must be finite and > 0");
  require(u0 <= std::min(u1max, u2max), "u0", "must not exceed min(u1max, u2max)");
  require(finite(T) && T > 0.0, "T", "must be finite and > 0");
  require(finite(x1_0), "x1_0", "must be finite");
  require(finite(x2_0), "x2_0", "must be finite");
}

StateVec state_rhs(const ModelParams& p, const StateVec& s, const ControlVec& u) {
  return {p.r1 * (p.xbar1 - s.x1) + u.u1 * s.x2, p.r2 * (p.xbar2 - s.x2) + u.u2 * s.x1};
}

AdjointVec adjoint_rhs(const ModelParams& p, const AdjointVec& lam, const ControlVec& u) {
  return {-p.alpha + lam.lam1 * p.r1 - lam.lam2 * u.u2,
          -(1.0 - p.alpha) - lam.lam1 * u.u1 + lam.lam2 * p.r2};
}

std::pair<double, double> switching_functions(const StateVec& s, const AdjointVec& lam) {
  return {lam.lam1 * s.x2, lam.lam2 * s.x1};
}

ControlVec control_law(const ModelParams& p, const StateVec& s, const AdjointVec& lam) {
  const auto [psi1, psi2] = switching_functions(s, lam);
  if (p.epsilon.is_infinite()) {
    return {bang_bang(psi1, p.u1max), bang_bang(psi2, p.u2max)};
  }
  const double eps = p.epsilon.value();
  ControlVec u;
  // A zero weight removes that spouse's cost term, leaving H linear in u_i.
  u.u1 = p.alpha == 0.0 ? bang_bang(psi1, p.u1max)
                        : clamp_control(eps / p.alpha * psi1 + p.u0, p.u1max);
  u.u2 = p.alpha == 1.0 ? bang_bang(psi2, p.u2max)
                        : clamp_control(eps / (1.0 - p.alpha) * psi2 + p.u0, p.u2max);
  return u;
}

double running_payoff(const ModelParams& p, const StateVec& s, const ControlVec& u) {
  double f1 = s.x1;
  double f2 = s.x2;
  if (!p.epsilon.is_infinite()) {
    const double k = 1.0 / (2.0 * p.epsilon.value());
    f1 -= k * (u.u1 - p.u0) * (u.u1 - p.u0);
    f2 -= k * (u.u2 - p.u0) * (u.u2 - p.u0);
  }
  return p.alpha * f1 + (1.0 - p.alpha) * f2;
}

double hamiltonian(const ModelParams& p, const StateVec& s, const ControlVec& u,
                   const AdjointVec& lam) {
  const StateVec f = state_rhs(p, s, u);
  return running_payoff(p, s, u) + lam.lam1 * f.x1 + lam.lam2 * f.x2;
}

bool admissible(const ModelParams& p, const ControlVec& u) {
  return u.u1 >= 0.0 && u.u1 <= p.u1max && u.u2 >= 0.0 && u.u2 <= p.u2max;
}

double objective(const ModelParams& p, const Trajectory& traj) {
  traj.check_shape();
  const std::size_t n = traj.grid.size();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = running_payoff(p, {traj.x1[k], traj.x2[k]}, {traj.u1[k], traj.u2[k]});
    sum += (k == 0 || k + 1 == n) ? 0.5 * f : f;
  }
  return sum * traj.grid.step();
}

// Grid / Trajectory

Grid::Grid(std::size_t n_steps, double T) : n_steps_(n_steps), T_(T), h_(0.0) {
  if (n_steps < 2) throw InvalidParams("n_steps", "must be >= 2");
  if (!(std::isfinite(T) && T > 0.0)) throw InvalidParams("T", "must be finite and > 0");
  h_ = T / static_cast<double>(n_steps);
}

double Grid::node(std::size_t k) const {
  if (k == n_steps_) return T_;
  return T_ * static_cast<double>(k) / static_cast<double>(n_steps_);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> t(size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = node(k);
  return t;
}

Trajectory::Trajectory(Grid g, StateArrays s, AdjointArrays a, ControlArrays u)
    : grid(g),
      x1(std::move(s.x1)),
      x2(std::move(s.x2)),
      lam1(std::move(a.lam1)),
      lam2(std::move(a.lam2)),
      u1(std::move(u.u1)),
      u2(std::move(u.u2)) {}

void Trajectory::check_shape() const {
  const std::size_t n = grid.size();
  for (const auto* v : {&x1, &x2, &lam1, &lam2, &u1, &u2}) {
    if (v->size() != n) {
      throw InvalidTrajectory("trajectory array of length " + std::to_string(v->size()) +
                              " on a grid of " + std::to_string(n) + " nodes");
    }
  }
}

}  // namespace marital
