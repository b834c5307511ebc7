#include "marital/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marital/errors.hpp"

namespace marital {

namespace {

void require_aligned(const Grid& g, const ControlArrays& u) {
  if (u.u1.size() != g.size() || u.u2.size() != g.size()) {
    throw InvalidTrajectory("control arrays must have " + std::to_string(g.size()) + " nodes");
  }
}

ControlVec midpoint(const ControlArrays& u, std::size_t k) {
  return {0.5 * (u.u1[k] + u.u1[k + 1]), 0.5 * (u.u2[k] + u.u2[k + 1])};
}

StateVec axpy(const StateVec& s, double a, const StateVec& d) {
  return {s.x1 + a * d.x1, s.x2 + a * d.x2};
}

AdjointVec axpy(const AdjointVec& l, double a, const AdjointVec& d) {
  return {l.lam1 + a * d.lam1, l.lam2 + a * d.lam2};
}

double l1_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

void SolverConfig::validate() const {
  if (n_steps < 2) throw InvalidParams("n_steps", "must be >= 2");
  if (!(std::isfinite(tolerance) && tolerance > 0.0))
    throw InvalidParams("tolerance", "must be finite and > 0");
  if (!(relaxation > 0.0 && relaxation <= 1.0))
    throw InvalidParams("relaxation", "must lie in (0, 1]");
  if (max_iters < 1) throw InvalidParams("max_iters", "must be >= 1");
  if (initial_u1 && !(std::isfinite(*initial_u1) && *initial_u1 >= 0.0))
    throw InvalidParams("initial_u1", "must be finite and >= 0");
  if (initial_u2 && !(std::isfinite(*initial_u2) && *initial_u2 >= 0.0))
    throw InvalidParams("initial_u2", "must be finite and >= 0");
}

StateArrays forward_sweep(const ModelParams& p, const Grid& g, const ControlArrays& u) {
  require_aligned(g, u);
  const std::size_t n = g.size();
  const double h = g.step();
  StateArrays x{std::vector<double>(n), std::vector<double>(n)};
  StateVec s{p.x1_0, p.x2_0};
  x.x1[0] = s.x1;
  x.x2[0] = s.x2;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const ControlVec u0{u.u1[k], u.u2[k]};
    const ControlVec um = midpoint(u, k);
    const ControlVec u1{u.u1[k + 1], u.u2[k + 1]};
    const StateVec k1 = state_rhs(p, s, u0);
    const StateVec k2 = state_rhs(p, axpy(s, 0.5 * h, k1), um);
    const StateVec k3 = state_rhs(p, axpy(s, 0.5 * h, k2), um);
    const StateVec k4 = state_rhs(p, axpy(s, h, k3), u1);
    s.x1 += h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1);
    s.x2 += h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2);
    if (!std::isfinite(s.x1) || !std::isfinite(s.x2)) {
      throw DivergenceError("forward sweep produced a non-finite state at node " +
                                std::to_string(k + 1),
                            k + 1);
    }
    x.x1[k + 1] = s.x1;
    x.x2[k + 1] = s.x2;
  }
  return x;
}

AdjointArrays backward_sweep(const ModelParams& p, const Grid& g, const ControlArrays& u) {
  require_aligned(g, u);
  const std::size_t n = g.size();
  const double h = g.step();
  AdjointArrays lam{std::vector<double>(n), std::vector<double>(n)};
  AdjointVec l{0.0, 0.0};
  lam.lam1[n - 1] = 0.0;
  lam.lam2[n - 1] = 0.0;
  for (std::size_t k = n - 1; k > 0; --k) {
    const ControlVec ut{u.u1[k], u.u2[k]};
    const ControlVec um = midpoint(u, k - 1);
    const ControlVec ub{u.u1[k - 1], u.u2[k - 1]};
    const AdjointVec k1 = adjoint_rhs(p, l, ut);
    const AdjointVec k2 = adjoint_rhs(p, axpy(l, -0.5 * h, k1), um);
    const AdjointVec k3 = adjoint_rhs(p, axpy(l, -0.5 * h, k2), um);
    const AdjointVec k4 = adjoint_rhs(p, axpy(l, -h, k3), ub);
    l.lam1 -= h / 6.0 * (k1.lam1 + 2.0 * k2.lam1 + 2.0 * k3.lam1 + k4.lam1);
    l.lam2 -= h / 6.0 * (k1.lam2 + 2.0 * k2.lam2 + 2.0 * k3.lam2 + k4.lam2);
    if (!std::isfinite(l.lam1) || !std::isfinite(l.lam2)) {
      throw DivergenceError("backward sweep produced a non-finite adjoint at node " +
                                std::to_string(k - 1),
                            k - 1);
    }
    lam.lam1[k - 1] = l.lam1;
    lam.lam2[k - 1] = l.lam2;
  }
  return lam;
}

ControlArrays update_controls(const ModelParams& p, const StateArrays& x,
                              const AdjointArrays& lam, const ControlArrays& old_u,
                              double theta) {
  const std::size_t n = old_u.u1.size();
  if (x.x1.size() != n || x.x2.size() != n || lam.lam1.size() != n || lam.lam2.size() != n ||
      old_u.u2.size() != n) {
    throw InvalidTrajectory("update_controls: arrays are not aligned");
  }
  ControlArrays u{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const ControlVec law = control_law(p, {x.x1[k], x.x2[k]}, {lam.lam1[k], lam.lam2[k]});
    u.u1[k] = std::clamp(theta * law.u1 + (1.0 - theta) * old_u.u1[k], 0.0, p.u1max);
    u.u2[k] = std::clamp(theta * law.u2 + (1.0 - theta) * old_u.u2[k], 0.0, p.u2max);
  }
  return u;
}

bool relative_converged(const std::vector<double>& v, const std::vector<double>& v_old,
                        double tol) {
  double diff = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) diff += std::abs(v[k] - v_old[k]);
  return tol * l1_norm(v) - diff >= 0.0;
}

SolveResult fbs_solve(const ModelParams& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  const Grid g(cfg.n_steps, p.T);
  const std::size_t n = g.size();

  ControlArrays u{
      std::vector<double>(n, std::clamp(cfg.initial_u1.value_or(p.u0), 0.0, p.u1max)),
      std::vector<double>(n, std::clamp(cfg.initial_u2.value_or(p.u0), 0.0, p.u2max))};

  int iteration = 0;
  const auto sweep = [&](const ControlArrays& controls) {
    try {
      return std::pair{forward_sweep(p, g, controls), backward_sweep(p, g, controls)};
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (FBS iteration " +
                                std::to_string(iteration) + ")",
                            e.node(), iteration);
    }
  };

  auto [x, lam] = sweep(u);
  Trajectory best(g, x, lam, u);
  double best_j = objective(p, best);
  std::vector<double> history;

  while (iteration < cfg.max_iters) {
    ++iteration;
    ControlArrays u_new = update_controls(p, x, lam, u, cfg.relaxation);
    auto [x_new, lam_new] = sweep(u_new);

    double max_change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      max_change = std::max({max_change, std::abs(u_new.u1[k] - u.u1[k]),
                             std::abs(u_new.u2[k] - u.u2[k])});
    }
    history.push_back(max_change);

    const double tol = cfg.tolerance;
    const bool converged =
        relative_converged(u_new.u1, u.u1, tol) && relative_converged(u_new.u2, u.u2, tol) &&
        relative_converged(x_new.x1, x.x1, tol) && relative_converged(x_new.x2, x.x2, tol) &&
        relative_converged(lam_new.lam1, lam.lam1, tol) &&
        relative_converged(lam_new.lam2, lam.lam2, tol);

    u = std::move(u_new);
    x = std::move(x_new);
    lam = std::move(lam_new);

    Trajectory current(g, x, lam, u);
    const double j = objective(p, current);
    if (converged) {
      return SolveResult{std::move(current), true, iteration, j, std::move(history)};
    }
    if (j > best_j) {
      best_j = j;
      best = std::move(current);
    }
  }
  return SolveResult{std::move(best), false, iteration, best_j, std::move(history)};
}

ControlArrays piecewise_controls(const Grid& g, const std::vector<double>& seg_u1,
                                 const std::vector<double>& seg_u2) {
  const std::size_t segments = seg_u1.size();
  if (segments == 0 || seg_u2.size() != segments) {
    throw InvalidParams("segments", "both spouses need the same non-zero segment count");
  }
  ControlArrays u{std::vector<double>(g.size()), std::vector<double>(g.size())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    // Integer arithmetic keeps segment boundaries exact when segments divides n_steps.
    std::size_t s = k * segments / g.n_steps();
    s = std::min(s, segments - 1);
    u.u1[k] = seg_u1[s];
    u.u2[k] = seg_u2[s];
  }
  return u;
}

double evaluate_controls(const ModelParams& p, const Grid& g, const ControlArrays& u) {
  StateArrays x = forward_sweep(p, g, u);
  // The objective does not depend on the adjoint.
  AdjointArrays lam{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  return objective(p, Trajectory(g, std::move(x), std::move(lam), u));
}

OracleResult oracle_search(const ModelParams& p, const OracleConfig& cfg) {
  p.validate();
  if (cfg.segments < 1) throw InvalidParams("segments", "must be >= 1");
  if (cfg.levels < 2) throw InvalidParams("levels", "must be >= 2");
  const Grid g(cfg.n_steps, p.T);

  const auto level_value = [&](std::size_t idx, double umax) {
    return umax * static_cast<double>(idx) / static_cast<double>(cfg.levels - 1);
  };

  // levels^(2 * segments), saturating at budget + 1.
  std::uint64_t count = 1;
  bool over_budget = false;
  for (std::size_t i = 0; i < 2 * cfg.segments && !over_budget; ++i) {
    if (count > cfg.budget / cfg.levels) {
      over_budget = true;
    } else {
      count *= cfg.levels;
      over_budget = count > cfg.budget;
    }
  }

  OracleMode mode = cfg.mode;
  if (mode == OracleMode::Auto) {
    mode = over_budget ? OracleMode::CoordinateDescent : OracleMode::Exhaustive;
  }
  if (mode == OracleMode::Exhaustive && over_budget) {
    throw BudgetExceeded("exhaustive oracle search needs more than " +
                         std::to_string(cfg.budget) + " candidates (levels^(2*segments))");
  }

  const std::size_t dims = 2 * cfg.segments;
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> s1(cfg.segments), s2(cfg.segments);
  const auto evaluate = [&](const std::vector<std::size_t>& digits) {
    for (std::size_t s = 0; s < cfg.segments; ++s) {
      s1[s] = level_value(digits[s], p.u1max);
      s2[s] = level_value(digits[cfg.segments + s], p.u2max);
    }
    return evaluate_controls(p, g, piecewise_controls(g, s1, s2));
  };

  OracleResult result;
  result.mode_used = mode;
  std::vector<std::size_t> best_idx(dims, 0);
  double best_j = evaluate(idx);
  result.candidates_evaluated = 1;

  if (mode == OracleMode::Exhaustive) {
    for (std::uint64_t c = 1; c < count; ++c) {
      // Odometer increment in base `levels`.
      for (std::size_t d = 0; d < dims; ++d) {
        if (++idx[d] < cfg.levels) break;
        idx[d] = 0;
      }
      const double j = evaluate(idx);
      ++result.candidates_evaluated;
      if (j > best_j) {
        best_j = j;
        best_idx = idx;
      }
    }
  } else {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t level = 0; level < cfg.levels; ++level) {
          if (level == best_idx[d]) continue;
          idx = best_idx;
          idx[d] = level;
          const double j = evaluate(idx);
          ++result.candidates_evaluated;
          if (j > best_j) {
            best_j = j;
            best_idx = idx;
            improved = true;
          }
        }
      }
    }
  }

  result.u1.resize(cfg.segments);
  result.u2.resize(cfg.segments);
  for (std::size_t s = 0; s < cfg.segments; ++s) {
    result.u1[s] = level_value(best_idx[s], p.u1max);
    result.u2[s] = level_value(best_idx[cfg.segments + s], p.u2max);
  }
  result.objective_value = best_j;
  return result;
}

}  // namespace marital
